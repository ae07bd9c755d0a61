#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/field.hpp"

namespace netkin {

namespace detail {

inline std::vector<std::string> state_component_names(std::size_t m) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m; ++i) names.push_back("v" + std::to_string(i + 1));
  return names;
}

}  // namespace detail

// One logged interaction: ordered (active, passive) pair and the action the
// active agent played (law-specific id, -1 if none).
struct Event {
  double t = 0.0;
  std::uint32_t active = 0;
  std::uint32_t passive = 0;
  std::int32_t action = -1;
};

struct TrajectoryPoint {
  double t = 0.0;
  Field state;  // per-site state (deterministic solvers) or per-site mean (particle runs)
  Field eta;    // spatial marginal; empty for field-level solvers
  double quad_variation = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> particle_states;  // flattened N x dim when retained
};

// Ordered snapshots plus an optional event log and the seed that produced the
// run. Snapshot timestamps are strictly increasing.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(SiteSpace space, std::vector<std::string> component_names, std::uint64_t seed = 0)
      : space_(std::move(space)), component_names_(std::move(component_names)), seed_(seed) {}

  void add_point(TrajectoryPoint point) {
    if (!points_.empty() && !(point.t > points_.back().t))
      throw ArgumentError("Trajectory: snapshot timestamps must be strictly increasing");
    points_.push_back(std::move(point));
  }

  const std::vector<TrajectoryPoint>& points() const { return points_; }
  const TrajectoryPoint& front() const { return points_.front(); }
  const TrajectoryPoint& back() const { return points_.back(); }
  bool empty() const { return points_.empty(); }

  std::vector<Event>& events() { return events_; }
  const std::vector<Event>& events() const { return events_; }

  const SiteSpace& space() const {
    if (!space_) throw ArgumentError("Trajectory: no site space");
    return *space_;
  }
  const std::vector<std::string>& component_names() const { return component_names_; }
  std::uint64_t seed() const { return seed_; }

  bool has_eta() const { return !points_.empty() && !points_.front().eta.empty(); }
  bool has_quad_variation() const {
    return !points_.empty() && !std::isnan(points_.front().quad_variation);
  }

 private:
  std::optional<SiteSpace> space_;
  std::vector<std::string> component_names_;
  std::uint64_t seed_ = 0;
  std::vector<TrajectoryPoint> points_;
  std::vector<Event> events_;
};

}  // namespace netkin
