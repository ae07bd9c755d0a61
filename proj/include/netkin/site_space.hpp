#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "netkin/common.hpp"

namespace netkin {

// Fixed structural domain the agents live on: either a periodic 1-D grid of n
// cells on [0, 1) or a finite node set. Immutable and cheap to copy.
class SiteSpace {
 public:
  static SiteSpace periodic_grid(std::size_t n_cells) {
    if (n_cells == 0) throw ArgumentError("SiteSpace: grid needs at least one cell");
    auto impl = std::make_shared<Impl>();
    impl->grid = true;
    impl->n = n_cells;
    impl->h = 1.0 / static_cast<double>(n_cells);
    return SiteSpace(std::move(impl));
  }

  static SiteSpace network(std::vector<std::string> node_ids) {
    if (node_ids.empty()) throw ArgumentError("SiteSpace: network needs at least one node");
    std::unordered_set<std::string> seen;
    for (const auto& id : node_ids)
      if (!seen.insert(id).second)
        throw ArgumentError("SiteSpace: duplicate node id '" + id + "'");
    auto impl = std::make_shared<Impl>();
    impl->grid = false;
    impl->n = node_ids.size();
    impl->ids = std::move(node_ids);
    return SiteSpace(std::move(impl));
  }

  static SiteSpace network(std::size_t n_nodes) {
    std::vector<std::string> ids;
    ids.reserve(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) ids.push_back(std::to_string(i));
    return network(std::move(ids));
  }

  bool is_grid() const { return impl_->grid; }
  std::size_t size() const { return impl_->n; }

  double spacing() const {
    require_grid("spacing");
    return impl_->h;
  }

  // Grid coordinate of a site; node index for networks (used in exports).
  double position(std::size_t site) const {
    check_site(site);
    return impl_->grid ? static_cast<double>(site) * impl_->h : static_cast<double>(site);
  }

  // Weight of one site in the midpoint quadrature rule: h on grids, 1 on networks.
  double quadrature_weight() const { return impl_->grid ? impl_->h : 1.0; }

  // Periodic distance on the unit interval.
  double distance(std::size_t a, std::size_t b) const {
    require_grid("distance");
    check_site(a);
    check_site(b);
    const double d = std::abs(position(a) - position(b));
    return std::min(d, 1.0 - d);
  }

  const std::vector<std::string>& node_ids() const {
    if (impl_->grid) throw UnsupportedError("SiteSpace: grids have no node ids");
    return impl_->ids;
  }

  bool same_as(const SiteSpace& other) const {
    if (impl_ == other.impl_) return true;
    return impl_->grid == other.impl_->grid && impl_->n == other.impl_->n &&
           impl_->ids == other.impl_->ids;
  }

  void check_site(std::size_t site) const {
    if (site >= impl_->n) throw DomainError("SiteSpace: site index out of range");
  }

 private:
  struct Impl {
    bool grid = true;
    std::size_t n = 0;
    double h = 0.0;
    std::vector<std::string> ids;
  };

  explicit SiteSpace(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  void require_grid(const char* what) const {
    if (!impl_->grid) throw UnsupportedError(std::string("SiteSpace: ") + what + " requires a grid");
  }

  std::shared_ptr<const Impl> impl_;
};

inline void require_same_space(const SiteSpace& a, const SiteSpace& b, const char* what) {
  if (!a.same_as(b)) throw DimensionError(std::string(what) + ": mismatched site spaces");
}

}  // namespace netkin
