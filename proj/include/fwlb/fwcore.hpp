#pragma once

// Vector-space Frank-Wolfe on the ball model problem and on ellipsoids whose
// objective curvature matches the constraint (Q = alpha A).
//
// The ball instance minimises (mu R^2 / 2) |x/R - kappa p|^2 over B_R(0).
// kappa = 1 is the boundary-optimizer model problem; kappa < 1 and kappa > 1
// put the unconstrained minimiser inside or outside the ball.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "fwlb/dynamics.hpp"
#include "fwlb/error.hpp"
#include "fwlb/linalg.hpp"
#include "fwlb/numeric.hpp"
#include "fwlb/polar.hpp"

namespace fwlb::fwcore {

template <class S>
struct BallInstance {
  Vec<S> p;          // unit direction of the target
  S radius;
  S mu;
  S target_scale;    // kappa

  std::size_t dimension() const { return p.size(); }
  bool boundary_optimizer(const Context<S>& ctx) const {
    using std::abs;
    return !(abs(target_scale - 1.0) > ctx.slack());
  }
};

/// Validated ball instance. Throws InvalidArgument for d < 2, |p| != 1, R <= 0 or mu <= 0.
template <class S>
BallInstance<S> make_ball(const Context<S>& ctx, Vec<S> p, S radius, S mu, S target_scale) {
  using std::abs;
  if (p.size() < 2) throw InvalidArgument("ball instance needs dimension >= 2");
  if (abs(norm(p) - 1.0) > ctx.slack()) throw InvalidArgument("target direction p must have unit norm");
  if (!(radius > 0.0) || !(mu > 0.0) || !(target_scale > 0.0)) {
    throw InvalidArgument("radius, mu and target scale must be positive");
  }
  return {std::move(p), std::move(radius), std::move(mu), std::move(target_scale)};
}

/// Default model problem f(x) = |x - p|^2 over the unit ball (mu = L = 2).
template <class S>
BallInstance<S> make_ball(const Context<S>& ctx, Vec<S> p) {
  return make_ball(ctx, std::move(p), ctx.num(1.0), ctx.num(2.0), ctx.num(1.0));
}

template <class S>
struct EllipsoidInstance {
  Mat<S> A;   // SPD; feasible set x^T A x <= 1
  S alpha;    // objective 1/2 x^T (alpha A) x + c^T x
  Vec<S> c;
};

enum class RuleKind { ExactLineSearch, ShortStep, Schedule };

template <class S>
struct StepRule {
  RuleKind kind = RuleKind::ExactLineSearch;
  std::vector<S> schedule;

  static StepRule exact() { return {RuleKind::ExactLineSearch, {}}; }
  static StepRule short_step() { return {RuleKind::ShortStep, {}}; }
  static StepRule fixed(std::vector<S> gammas) { return {RuleKind::Schedule, std::move(gammas)}; }
};

template <class S>
struct TrajectoryRecord {
  std::size_t t = 0;
  S r;
  std::optional<S> theta;  // absent once r hits the termination threshold
  std::optional<S> s;      // r_{t+1} / r_t, filled when the next iterate exists
  std::optional<S> gamma;  // stepsize taken from this iterate
  S gap;
  std::optional<Vec<S>> x;
};

enum class StopReason { Horizon, GapReached, Terminated };

template <class S>
struct Trajectory {
  std::vector<TrajectoryRecord<S>> records;
  StopReason stop = StopReason::Horizon;
  PrecisionConfig precision;
};

/// argmin_{|v| <= 1} <x - p, v> = -(x - p)/|x - p|. Throws Termination when x = p.
template <class S>
Vec<S> lmo_ball(const Context<S>& ctx, const Vec<S>& x, const Vec<S>& p) {
  const Vec<S> e = x - p;
  const S n = norm(e);
  if (!(n > ctx.slack())) throw Termination("lmo_ball: x coincides with p");
  return scaled(S(-1.0 / n), e);
}

/// min{1, <grad, x - v> / (L |x - v|^2)}, clamped below at 0.
template <class S>
S short_step_gamma(const Context<S>& ctx, const Vec<S>& x, const Vec<S>& v, const Vec<S>& grad, const S& lipschitz) {
  const Vec<S> d = x - v;
  const S dd = dot(d, d);
  if (!(dd > ctx.slack() * ctx.slack())) throw DegenerateDirection("short_step_gamma: x and v coincide");
  S gamma = dot(grad, d) / (lipschitz * dd);
  if (gamma > 1.0) gamma = ctx.num(1.0);
  if (gamma < 0.0) gamma = ctx.num(0.0);
  return gamma;
}

/// (|x - p|, <x - p, p>/|x - p|). Throws Termination when x = p.
template <class S>
PolarState<S> to_polar(const Context<S>& ctx, const Vec<S>& x, const Vec<S>& p) {
  const Vec<S> e = x - p;
  const S r = norm(e);
  if (!(r > ctx.slack())) throw Termination("to_polar: x coincides with p");
  S theta = dot(e, p) / r;
  if (theta < -1.0) theta = ctx.num(-1.0);
  return {r, theta};
}

namespace detail {

template <class S>
void fill_contractions(Trajectory<S>& traj) {
  auto& rec = traj.records;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
    if (rec[i].r > 0.0) rec[i].s = rec[i + 1].r / rec[i].r;
  }
}

template <class S>
void check_schedule(const StepRule<S>& rule, std::size_t horizon) {
  if (rule.kind == RuleKind::Schedule && rule.schedule.size() < horizon) {
    throw InvalidArgument("schedule has " + std::to_string(rule.schedule.size()) + " stepsizes, horizon is " +
                          std::to_string(horizon));
  }
}

}  // namespace detail

/// FW x_{t+1} = (1 - gamma_t) x_t + gamma_t v_t on a ball instance.
///
/// Stops after `horizon` steps, once gap <= stop_gap, or when the iterate
/// reaches the minimiser within the context threshold.
template <class S>
Trajectory<S> run_fw(const Context<S>& ctx, const BallInstance<S>& inst, const Vec<S>& x0, const StepRule<S>& rule,
                     std::size_t horizon, const std::optional<std::type_identity_t<S>>& stop_gap = std::nullopt,
                     bool keep_points = false) {
  using std::sqrt;
  if (x0.size() != inst.dimension()) throw InvalidArgument("x0 dimension does not match the instance");
  if (norm(x0) > inst.radius * (1.0 + ctx.slack())) throw InfeasibleStart("x0 lies outside B_R(0)");
  detail::check_schedule(rule, horizon);

  const S& kappa = inst.target_scale;
  const Vec<S> z = scaled(kappa, inst.p);                                  // unconstrained minimiser / R
  const Vec<S> star = kappa > 1.0 ? inst.p : z;                           // constrained minimiser / R
  const S excess = kappa > 1.0 ? kappa - 1.0 : ctx.num(0.0);
  const S gap_scale = inst.mu * inst.radius * inst.radius / 2.0;
  const S inv_radius = 1.0 / inst.radius;

  Trajectory<S> traj;
  traj.precision = ctx.config();
  Vec<S> x = x0;
  for (std::size_t t = 0;; ++t) {
    const Vec<S> y = scaled(inv_radius, x);
    const Vec<S> e = y - z;
    const Vec<S> to_star = y - star;
    TrajectoryRecord<S> rec;
    rec.t = t;
    rec.r = norm(to_star);
    rec.gap = gap_scale * (dot(e, e) - excess * excess);
    if (rec.gap < 0.0) rec.gap = ctx.num(0.0);
    if (keep_points) rec.x = x;

    const bool terminated = !(rec.r > ctx.slack()) || !(norm(e) > ctx.slack());
    if (!terminated) {
      S theta = dot(to_star, inst.p) / rec.r;
      if (theta < -1.0) theta = ctx.num(-1.0);
      rec.theta = theta;
    }
    traj.records.push_back(rec);

    if (terminated) {
      traj.stop = StopReason::Terminated;
      break;
    }
    if (stop_gap && !(rec.gap > *stop_gap)) {
      traj.stop = StopReason::GapReached;
      break;
    }
    if (t == horizon) {
      traj.stop = StopReason::Horizon;
      break;
    }

    // LMO over B_R: -R e / |e|, since grad = mu R e.
    const Vec<S> v = scaled(S(-inst.radius / norm(e)), e);
    S gamma = ctx.num(0.0);
    switch (rule.kind) {
      case RuleKind::ExactLineSearch: {
        const Vec<S> d = y - scaled(inv_radius, v);
        gamma = dot(e, d) / dot(d, d);
        if (gamma > 1.0) gamma = ctx.num(1.0);
        if (gamma < 0.0) gamma = ctx.num(0.0);
        break;
      }
      case RuleKind::ShortStep:
        gamma = short_step_gamma(ctx, x, v, scaled(S(inst.mu * inst.radius), e), inst.mu);
        break;
      case RuleKind::Schedule:
        gamma = rule.schedule[t];
        break;
    }
    traj.records.back().gamma = gamma;
    x = convex_step(x, v, gamma);
  }
  detail::fill_contractions(traj);
  return traj;
}

/// Precomputed spectral data of an ellipsoid instance.
template <class S>
struct EllipsoidGeometry {
  SymmetricEigen<S> eig;
  Mat<S> inverse;     // A^{-1}
  Mat<S> sqrt_a;      // A^{1/2}
  Mat<S> inv_sqrt_a;  // A^{-1/2}
};

/// Eigendecomposition of A with the SPD check lambda_min > 1e-12 lambda_max.
template <class S>
EllipsoidGeometry<S> ellipsoid_geometry(const Context<S>& ctx, const Mat<S>& A) {
  using std::abs;
  using std::sqrt;
  const std::size_t n = A.n;
  if (n < 2) throw InvalidArgument("ellipsoid needs dimension >= 2");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const S scale = abs(A(i, j)) + abs(A(j, i)) + 1.0;
      if (abs(A(i, j) - A(j, i)) > ctx.slack() * scale) throw InvalidArgument("A must be symmetric");
    }
  // tolerance 2^-(bits-4) drives Jacobi to full working precision
  EllipsoidGeometry<S> g;
  g.eig = jacobi_eigen(A, ctx.pow2(-(ctx.bits() - 4)));
  const S& lo = g.eig.values.front();
  const S& hi = g.eig.values.back();
  if (!(hi > 0.0) || !(lo > hi * 1e-12)) throw InvalidArgument("A is not positive definite");
  g.inverse = spectral_function(g.eig, [](const S& l) { return S(1.0 / l); });
  g.sqrt_a = spectral_function(g.eig, [](const S& l) { return S(sqrt(l)); });
  g.inv_sqrt_a = spectral_function(g.eig, [](const S& l) { return S(1.0 / sqrt(l)); });
  return g;
}

template <class S>
S ellipsoid_objective(const EllipsoidInstance<S>& inst, const Vec<S>& x) {
  return inst.alpha * dot(x, inst.A * x) / 2.0 + dot(inst.c, x);
}

/// Constrained minimiser: the unconstrained one, -A^{-1}c/alpha, pulled back
/// onto the ellipsoid along the ray when it lies outside.
template <class S>
Vec<S> ellipsoid_minimizer(const EllipsoidInstance<S>& inst, const EllipsoidGeometry<S>& geo) {
  using std::sqrt;
  Vec<S> xu = scaled(S(-1.0 / inst.alpha), geo.inverse * inst.c);
  const S level = dot(xu, inst.A * xu);
  if (level > 1.0) xu = scaled(S(1.0 / sqrt(level)), xu);
  return xu;
}

/// FW on {x^T A x <= 1}; records the polar state of A^{1/2} x relative to the
/// mapped target so trajectories compare directly with ball runs.
template <class S>
Trajectory<S> run_fw(const Context<S>& ctx, const EllipsoidInstance<S>& inst, const Vec<S>& x0, const StepRule<S>& rule,
                     std::size_t horizon, const std::optional<std::type_identity_t<S>>& stop_gap = std::nullopt,
                     bool keep_points = false) {
  using std::sqrt;
  const auto geo = ellipsoid_geometry(ctx, inst.A);
  if (x0.size() != inst.A.n) throw InvalidArgument("x0 dimension does not match the instance");
  if (dot(x0, inst.A * x0) > 1.0 + ctx.slack()) throw InfeasibleStart("x0 lies outside the ellipsoid");
  detail::check_schedule(rule, horizon);

  const Vec<S> xstar = ellipsoid_minimizer(inst, geo);
  const S fstar = ellipsoid_objective(inst, xstar);
  const Vec<S> ustar = geo.sqrt_a * xstar;
  const S ustar_norm = norm(ustar);
  const Vec<S> pdir = scaled(S(1.0 / ustar_norm), ustar);
  const S lipschitz = inst.alpha * geo.eig.values.back();

  Trajectory<S> traj;
  traj.precision = ctx.config();
  Vec<S> x = x0;
  for (std::size_t t = 0;; ++t) {
    const Vec<S> grad = scaled(inst.alpha, inst.A * x) + inst.c;
    const Vec<S> du = geo.sqrt_a * x - ustar;
    TrajectoryRecord<S> rec;
    rec.t = t;
    rec.r = norm(du);
    rec.gap = ellipsoid_objective(inst, x) - fstar;
    if (rec.gap < 0.0) rec.gap = ctx.num(0.0);
    if (keep_points) rec.x = x;
    const bool terminated = !(rec.r > ctx.slack());
    if (!terminated) {
      S theta = dot(du, pdir) / rec.r;
      if (theta < -1.0) theta = ctx.num(-1.0);
      rec.theta = theta;
    }
    traj.records.push_back(rec);

    if (terminated) {
      traj.stop = StopReason::Terminated;
      break;
    }
    if (stop_gap && !(rec.gap > *stop_gap)) {
      traj.stop = StopReason::GapReached;
      break;
    }
    if (t == horizon) break;

    // closed-form LMO: -A^{-1} g / sqrt(g^T A^{-1} g)
    const Vec<S> w = geo.inverse * grad;
    const S gw = dot(grad, w);
    if (!(gw > 0.0)) {
      traj.stop = StopReason::Terminated;
      break;
    }
    const Vec<S> v = scaled(S(-1.0 / sqrt(gw)), w);
    S gamma = ctx.num(0.0);
    switch (rule.kind) {
      case RuleKind::ExactLineSearch: {
        const Vec<S> d = v - x;
        gamma = -dot(grad, d) / (inst.alpha * dot(d, inst.A * d));
        if (gamma > 1.0) gamma = ctx.num(1.0);
        if (gamma < 0.0) gamma = ctx.num(0.0);
        break;
      }
      case RuleKind::ShortStep:
        gamma = short_step_gamma(ctx, x, v, grad, lipschitz);
        break;
      case RuleKind::Schedule:
        gamma = rule.schedule[t];
        break;
    }
    traj.records.back().gamma = gamma;
    x = convex_step(x, v, gamma);
  }
  detail::fill_contractions(traj);
  return traj;
}

template <class S>
struct BallMapping {
  BallInstance<S> ball;  // mu = alpha, R = 1, target p~ = kappa p
  Mat<S> phi;            // A^{1/2}
  Mat<S> phi_inv;        // A^{-1/2}
  Vec<S> target;         // p~ = -(1/alpha) A^{-1/2} c
  bool boundary_optimizer = false;  // |p~| = 1 within slack
};

/// u = A^{1/2} x turns the ellipsoid instance into (alpha/2)|u - p~|^2 over the unit ball.
template <class S>
BallMapping<S> map_to_ball(const Context<S>& ctx, const EllipsoidInstance<S>& inst) {
  using std::abs;
  const auto geo = ellipsoid_geometry(ctx, inst.A);
  BallMapping<S> out;
  out.phi = geo.sqrt_a;
  out.phi_inv = geo.inv_sqrt_a;
  out.target = scaled(S(-1.0 / inst.alpha), geo.inv_sqrt_a * inst.c);
  const S kappa = norm(out.target);
  if (!(kappa > 0.0)) throw InvalidArgument("map_to_ball: c = 0 puts the target at the origin");
  out.ball = make_ball(ctx, scaled(S(1.0 / kappa), out.target), ctx.num(1.0), inst.alpha, kappa);
  out.boundary_optimizer = !(abs(kappa - 1.0) > ctx.slack());
  return out;
}

template <class S>
struct AffineReport {
  S max_gap_deviation;
  S max_point_deviation;
  std::size_t compared_steps = 0;
  bool boundary_optimizer = false;
};

/// Runs exact line search FW on the ellipsoid and on its ball image from
/// Phi(x0) and reports the largest per-iteration disagreement.
template <class S>
AffineReport<S> verify_affine_equivalence(const Context<S>& ctx, const EllipsoidInstance<S>& inst, const Vec<S>& x0,
                                          std::size_t horizon) {
  using std::abs;
  const auto mapping = map_to_ball(ctx, inst);
  const auto ell = run_fw(ctx, inst, x0, StepRule<S>::exact(), horizon, std::nullopt, true);
  const auto ball = run_fw(ctx, mapping.ball, mapping.phi * x0, StepRule<S>::exact(), horizon, std::nullopt, true);

  AffineReport<S> rep{ctx.num(0.0), ctx.num(0.0), 0, mapping.boundary_optimizer};
  const std::size_t n = std::min(ell.records.size(), ball.records.size());
  for (std::size_t t = 0; t < n; ++t) {
    const S dg = abs(ell.records[t].gap - ball.records[t].gap);
    if (dg > rep.max_gap_deviation) rep.max_gap_deviation = dg;
    const S dx = norm(mapping.phi * *ell.records[t].x - *ball.records[t].x);
    if (dx > rep.max_point_deviation) rep.max_point_deviation = dx;
  }
  rep.compared_steps = n;
  return rep;
}

/// Point in the plane span{e_perp, p} with polar state (r, theta), p = (0, 1).
template <class S>
Vec<S> embed_polar_2d(const Context<S>& ctx, const PolarState<S>& st) {
  using std::sqrt;
  S sin2 = 1.0 - st.theta * st.theta;
  if (sin2 < 0.0) sin2 = ctx.num(0.0);
  return Vec<S>{st.r * sqrt(sin2), 1.0 + st.r * st.theta};
}

}  // namespace fwlb::fwcore
