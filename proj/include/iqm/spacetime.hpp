#pragma once

#include <array>

namespace iqm {

using Point3 = std::array<double, 3>;

/// A space-time event: position in meters, time in seconds.
struct SpacetimePoint {
  Point3 position{};
  double time = 0;

  friend bool operator==(const SpacetimePoint&, const SpacetimePoint&) = default;
};

/// Axis-aligned box × time interval.
///
/// Membership is half-open ([lo, hi)) along every axis; a zero-extent axis
/// degenerates to the single coordinate lo.
struct SpacetimeDomain {
  Point3 box_min{};
  Point3 box_max{};
  double t_start = 0;
  double t_end = 0;

  /// t_end ≥ t_start and every box extent ≥ 0.
  bool well_formed() const noexcept;
  bool contains(const SpacetimePoint& p) const noexcept;
  bool overlaps(const SpacetimeDomain& other) const noexcept;

  /// Point at fractional coordinates u ∈ [0,1)^4 inside the domain.
  SpacetimePoint at(const std::array<double, 4>& u) const noexcept;

  friend bool operator==(const SpacetimeDomain&, const SpacetimeDomain&) = default;
};

}  // namespace iqm
