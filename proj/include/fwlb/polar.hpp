#pragma once

// Polar coordinates of an iterate relative to the target p, and the
// closed-form exact line search step in those coordinates.

#include <cmath>

#include "fwlb/numeric.hpp"

namespace fwlb::fwcore {

/// (r, theta) with r = |x - p| and theta = <x - p, p> / r.
///
/// Feasible iterates satisfy -1 <= theta <= -r/2; r = 0 is termination and
/// never stored here.
template <class S>
struct PolarState {
  S r;
  S theta;
};

/// theta within the context slack of -1: x - p is antiparallel to p.
template <class S>
bool is_collinear(const Context<S>& ctx, const PolarState<S>& st) {
  using std::abs;
  return !(abs(st.theta + 1.0) > ctx.slack());
}

/// Exact line search stepsize along the FW direction, in (0, 1].
template <class S>
S ls_gamma(const Context<S>& ctx, const PolarState<S>& st) {
  // Denominator as (1 + r + theta)^2 + (1 - theta)(1 + theta): no cancellation
  // near theta = -1, where it tends to r^2 and gamma to 1.
  const S rp1 = st.r + 1.0;
  const S a = rp1 + st.theta;
  S gamma = st.r * a / (a * a + (1.0 - st.theta) * (1.0 + st.theta));
  if (gamma > 1.0) gamma = ctx.num(1.0);
  return gamma;
}

}  // namespace fwlb::fwcore
