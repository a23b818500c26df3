#include "iqm/spacetime.hpp"

#include <algorithm>

namespace iqm {
namespace {

bool in_interval(double x, double lo, double hi) noexcept {
  return lo == hi ? x == lo : (x >= lo && x < hi);
}

bool intervals_overlap(double a_lo, double a_hi, double b_lo, double b_hi) noexcept {
  if (a_lo == a_hi) return in_interval(a_lo, b_lo, b_hi);
  if (b_lo == b_hi) return in_interval(b_lo, a_lo, a_hi);
  return std::max(a_lo, b_lo) < std::min(a_hi, b_hi);
}

}  // namespace

bool SpacetimeDomain::well_formed() const noexcept {
  for (int k = 0; k < 3; ++k)
    if (!(box_max[k] >= box_min[k])) return false;
  return t_end >= t_start;
}

bool SpacetimeDomain::contains(const SpacetimePoint& p) const noexcept {
  for (int k = 0; k < 3; ++k)
    if (!in_interval(p.position[k], box_min[k], box_max[k])) return false;
  return in_interval(p.time, t_start, t_end);
}

bool SpacetimeDomain::overlaps(const SpacetimeDomain& other) const noexcept {
  for (int k = 0; k < 3; ++k)
    if (!intervals_overlap(box_min[k], box_max[k], other.box_min[k], other.box_max[k])) return false;
  return intervals_overlap(t_start, t_end, other.t_start, other.t_end);
}

SpacetimePoint SpacetimeDomain::at(const std::array<double, 4>& u) const noexcept {
  SpacetimePoint p;
  for (int k = 0; k < 3; ++k) {
    const double x = box_min[k] + u[k] * (box_max[k] - box_min[k]);
    // Rounding may land exactly on the open upper edge.
    p.position[k] = (box_max[k] > box_min[k] && x >= box_max[k]) ? box_min[k] : x;
  }
  const double t = t_start + u[3] * (t_end - t_start);
  p.time = (t_end > t_start && t >= t_end) ? t_start : t;
  return p;
}

}  // namespace iqm
