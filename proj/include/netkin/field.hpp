#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/site_space.hpp"

namespace netkin {

// Per-site values on a SiteSpace, dim components per site (dim == 1 for
// densities). Site-major storage.
class Field {
 public:
  Field() = default;

  Field(SiteSpace space, std::size_t dim, double fill = 0.0)
      : space_(std::move(space)), dim_(dim), data_(space_->size() * dim, fill) {
    if (dim == 0) throw ArgumentError("Field: dim must be positive");
  }

  static Field scalar(SiteSpace space, std::vector<double> values) {
    if (values.size() != space.size())
      throw DimensionError("Field: value array length must equal the number of sites");
    Field f;
    f.space_ = std::move(space);
    f.dim_ = 1;
    f.data_ = std::move(values);
    return f;
  }

  static Field constant(SiteSpace space, double value) { return Field(std::move(space), 1, value); }

  static Field from_data(SiteSpace space, std::size_t dim, std::vector<double> site_major) {
    if (dim == 0) throw ArgumentError("Field: dim must be positive");
    if (site_major.size() != space.size() * dim)
      throw DimensionError("Field: value array length must equal sites * dim");
    Field f;
    f.space_ = std::move(space);
    f.dim_ = dim;
    f.data_ = std::move(site_major);
    return f;
  }

  bool empty() const { return !space_.has_value(); }
  std::size_t sites() const { return empty() ? 0 : space_->size(); }
  std::size_t dim() const { return dim_; }
  const SiteSpace& space() const {
    if (empty()) throw ArgumentError("Field: empty field has no site space");
    return *space_;
  }

  double& operator()(std::size_t site, std::size_t c = 0) { return data_[site * dim_ + c]; }
  double operator()(std::size_t site, std::size_t c = 0) const { return data_[site * dim_ + c]; }

  std::span<double> at(std::size_t site) { return {data_.data() + site * dim_, dim_}; }
  std::span<const double> at(std::size_t site) const { return {data_.data() + site * dim_, dim_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool nonnegative() const {
    for (double x : data_)
      if (!(x >= 0.0)) return false;
    return true;
  }

  // Quadrature integral per component: h * sum on grids, plain sum on networks.
  std::vector<double> integral() const {
    std::vector<double> out(dim_, 0.0);
    if (empty()) return out;
    for (std::size_t s = 0; s < sites(); ++s)
      for (std::size_t c = 0; c < dim_; ++c) out[c] += (*this)(s, c);
    const double w = space_->quadrature_weight();
    for (double& x : out) x *= w;
    return out;
  }

 private:
  std::optional<SiteSpace> space_;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

inline void require_same_space(const Field& a, const Field& b, const char* what) {
  if (a.empty() || b.empty()) throw DimensionError(std::string(what) + ": empty field");
  require_same_space(a.space(), b.space(), what);
}

}  // namespace netkin
