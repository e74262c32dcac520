#pragma once

// Scalar dynamical systems behind FW with exact line search on the unit
// ball: polar recurrences, the forward map F on (r, s), its inverse branch G,
// the reconstruction of theta from (r, s), and the monotonicity threshold.

#include <cmath>
#include <optional>
#include <string>

#include "fwlb/error.hpp"
#include "fwlb/numeric.hpp"
#include "fwlb/polar.hpp"

namespace fwlb::dynamics {

using fwcore::PolarState;

enum class Domain { M, Mtilde, Unchecked };

/// Residual r and contraction s = r_{t+1} / r_t.
template <class S>
struct RSState {
  S r;
  S s;
  Domain tag = Domain::Unchecked;
};

enum class StepStatus {
  Ok,
  Terminated,  // s = 0, so the next residual is 0
  DomainExit,  // numerator below -slack or (r, s) outside M
};

template <class S>
struct ForwardOutcome {
  RSState<S> state;
  StepStatus status = StepStatus::Ok;
};

enum class Branch { Primary, Alternate };

namespace detail {

/// Core arithmetic of F shared with the batch kernels; keep the operation
/// order in sync with src/kernels so the SIMD lanes stay bit-identical.
template <class S>
void forward_core(const S& r, const S& s, S& num, S& den) {
  const S q = (1.0 + r) * s;
  num = (1.0 - q) * (1.0 + q);
  den = 2.0 - 2.0 * s - (2.0 + r) * r * s * s;
}

template <class S>
void ls_core(const S& r, const S& theta, S& r_next_sq, S& rp1) {
  rp1 = r + 1.0;
  const S den = rp1 * rp1 + 2.0 * rp1 * theta + 1.0;
  r_next_sq = r * r * (1.0 - theta * theta) / den;
}

/// Clamps values in [-slack, 0) to zero. Returns false below -slack.
template <class S>
bool clamp_radicand(const Context<S>& ctx, S& v) {
  if (v < 0.0) {
    if (v < -ctx.slack()) return false;
    v = ctx.num(0.0);
  }
  return true;
}

}  // namespace detail

/// Upper edge of M: 1/(1+r) on (0,1], sqrt((2-r)/4) on (1,2].
template <class S>
S sbar(const Context<S>&, const S& r) {
  using std::sqrt;
  if (!(r > 0.0) || r > 2.0) throw InvalidArgument("sbar: r must lie in (0, 2]");
  if (r <= 1.0) return 1.0 / (1.0 + r);
  return sqrt((2.0 - r) / 4.0);
}

template <class S>
bool in_M(const Context<S>& ctx, const S& r, const S& s) {
  const S& eps = ctx.slack();
  if (!(r > 0.0) || r > 2.0 + eps) return false;
  if (s < -eps) return false;
  const S rc = r > 2.0 ? ctx.num(2.0) : r;
  return !(s > sbar(ctx, rc) + eps);
}

template <class S>
bool in_Mtilde(const Context<S>& ctx, const S& r, const S& s) {
  const S& eps = ctx.slack();
  if (!(r > 0.0) || r > ctx.ratio(1, 3) + eps) return false;
  if (s < -eps) return false;
  return !(s > 1.0 / (1.0 + r) + eps);
}

/// One FW step with arbitrary stepsize gamma in polar coordinates.
/// nullopt means the step lands on p (r' below the termination threshold).
template <class S>
std::optional<PolarState<S>> polar_step(const Context<S>& ctx, const PolarState<S>& st, const S& gamma) {
  using std::sqrt;
  const S a = (1.0 - gamma) * st.r - gamma;
  const S r2 = a * a - 2.0 * gamma * a * st.theta + gamma * gamma;
  const S& thr = ctx.slack();
  if (!(r2 > thr * thr)) return std::nullopt;
  const S r_next = sqrt(r2);
  return PolarState<S>{r_next, (a * st.theta - gamma) / r_next};
}

/// Exact line search step via the closed forms for r_{t+1}^2 and theta_{t+1}.
template <class S>
std::optional<PolarState<S>> ls_polar_step(const Context<S>& ctx, const PolarState<S>& st) {
  using std::sqrt;
  if (fwcore::is_collinear(ctx, st)) return std::nullopt;
  S r2 = st.r;
  S rp1 = st.r;
  detail::ls_core(st.r, st.theta, r2, rp1);
  const S& thr = ctx.slack();
  if (!(r2 > thr * thr)) return std::nullopt;
  const S r_next = sqrt(r2);
  return PolarState<S>{r_next, -(rp1 / st.r) * r_next};
}

/// Forward map without throwing; the hot path for searches and replays.
template <class S>
ForwardOutcome<S> try_forward_F(const Context<S>& ctx, const RSState<S>& st) {
  using std::sqrt;
  ForwardOutcome<S> out{st, StepStatus::Ok};
  if (!in_M(ctx, st.r, st.s)) {
    out.status = StepStatus::DomainExit;
    return out;
  }
  S num = st.r;
  S den = st.r;
  detail::forward_core(st.r, st.s, num, den);
  if (!detail::clamp_radicand(ctx, num)) {
    out.status = StepStatus::DomainExit;
    return out;
  }
  out.state.r = st.r * st.s;
  out.state.s = sqrt(num / den);
  out.state.tag = Domain::M;
  if (!(out.state.r > 0.0)) out.status = StepStatus::Terminated;
  return out;
}

/// F(r, s) = (r s, sqrt((1 - (1+r)^2 s^2) / (2 - 2s - (2+r) r s^2))).
template <class S>
RSState<S> forward_F(const Context<S>& ctx, const RSState<S>& st) {
  auto out = try_forward_F(ctx, st);
  if (out.status == StepStatus::DomainExit) {
    throw DomainError("forward_F: (r, s) = (" + ctx.format(st.r) + ", " + ctx.format(st.s) + ") outside M");
  }
  return out.state;
}

/// X = (1+r)s^2 - r and Y = sqrt((1-s^2)(1-(1+r)^2 s^2)) of the backward map.
template <class S>
struct BackwardParts {
  S x;
  S y;
};

template <class S>
BackwardParts<S> backward_parts(const Context<S>& ctx, const RSState<S>& st) {
  using std::sqrt;
  const S q = (1.0 + st.r) * st.s;
  const S x = q * st.s - st.r;
  S rad = (1.0 - st.s * st.s) * ((1.0 - q) * (1.0 + q));
  if (!detail::clamp_radicand(ctx, rad)) {
    throw DomainError("backward_G: negative radicand at (r, s) = (" + ctx.format(st.r) + ", " + ctx.format(st.s) + ")");
  }
  return {x, sqrt(rad)};
}

/// G(r, s) = (r / (X+Y), X+Y) on M~; the Alternate branch uses X-Y instead.
template <class S>
RSState<S> backward_G(const Context<S>& ctx, const RSState<S>& st, Branch branch = Branch::Primary) {
  if (!in_Mtilde(ctx, st.r, st.s)) {
    throw DomainError("backward_G: (r, s) = (" + ctx.format(st.r) + ", " + ctx.format(st.s) + ") outside M~");
  }
  const auto [x, y] = backward_parts(ctx, st);
  const S denom = branch == Branch::Primary ? x + y : x - y;
  if (!(denom > 0.0)) throw DomainError("backward_G: alternate branch has non-positive X - Y");
  return {st.r / denom, denom, Domain::M};
}

/// theta = -s^2 (r+1) - sqrt((s^2-1)(s^2 (1+r)^2 - 1)); feasible for (r, s) in M.
template <class S>
S reconstruct_theta(const Context<S>& ctx, const RSState<S>& st) {
  using std::sqrt;
  if (!in_M(ctx, st.r, st.s)) {
    throw DomainError("reconstruct_theta: (r, s) outside M");
  }
  const S q = (1.0 + st.r) * st.s;
  S disc = (1.0 - st.s * st.s) * ((1.0 - q) * (1.0 + q));
  if (!detail::clamp_radicand(ctx, disc)) throw DomainError("reconstruct_theta: negative discriminant");
  S theta = -(st.s * q) - sqrt(disc);
  if (theta < -1.0) theta = ctx.num(-1.0);
  return theta;
}

/// r_1(s) = -1 + sqrt(1 - (2s^2 - s - 1) / (s^2 (s+1))), the s_{t+1} = s_t curve.
template <class S>
S threshold_r1(const S& s) {
  using std::sqrt;
  return sqrt(1.0 - (2.0 * s * s - s - 1.0) / (s * s * (s + 1.0))) - 1.0;
}

/// Monotonicity threshold g: the s in [0.49, 1] with r_1(s) = r, by bisection
/// to within the context slack.
template <class S>
S threshold_g(const Context<S>& ctx, const S& r) {
  S lo = ctx.num(0.49);
  S hi = ctx.num(1.0);
  const S r_max = threshold_r1(lo);
  if (!(r > 0.0) || r > r_max) {
    throw InvalidArgument("threshold_g: r outside (0, r_1(0.49)]");
  }
  // r_1 is decreasing in s; stop once the bracket is within the slack.
  while (hi - lo > ctx.slack()) {
    const S mid = (lo + hi) / 2.0;
    if (mid == lo || mid == hi) break;
    if (threshold_r1(mid) > r) lo = mid;
    else hi = mid;
  }
  return (lo + hi) / 2.0;
}

/// (1+s) r (2s + r) >= (1-s)(2s + 1), i.e. s_t >= s_{t-1} along G.
template <class S>
bool monotone_condition(const RSState<S>& st) {
  return (1.0 + st.s) * st.r * (2.0 * st.s + st.r) >= (1.0 - st.s) * (2.0 * st.s + 1.0);
}

/// A jump s_next < 1/2 must be preceded by s > 1/(1+r)^2.
template <class S>
bool check_jump_precondition(const S& r, const S& s, const S& s_next) {
  if (s_next >= 0.5) return true;
  return s > 1.0 / ((1.0 + r) * (1.0 + r));
}

}  // namespace fwlb::dynamics
