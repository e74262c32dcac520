#pragma once

// Backward-forward worst-case construction, forward replay and the
// lower-bound certificate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "fwlb/dynamics.hpp"
#include "fwlb/error.hpp"
#include "fwlb/fwcore.hpp"
#include "fwlb/numeric.hpp"

namespace fwlb::worstcase {

using dynamics::RSState;

/// 1 / (10 + (8/3) T), evaluated as 3 / (30 + 8T).
template <class S>
S choose_epsilon(const Context<S>& ctx, std::size_t horizon) {
  return ctx.ratio(3, 30 + 8 * static_cast<long long>(horizon));
}

/// max(256, 2T + 64) mantissa bits.
inline int default_construction_bits(std::size_t horizon) {
  return std::max(256, static_cast<int>(2 * horizon + 64));
}

template <class S>
struct ConstructionParams {
  std::size_t horizon = 0;
  std::optional<S> epsilon;  // choose_epsilon(horizon) when absent
  std::optional<S> r_max;    // 1/10 when absent
};

template <class S>
struct Construction {
  RSState<S> endpoint;              // (eps, 1 - 4/3 eps + 2 eps^2)
  RSState<S> start;                 // last backward state with r < r_max
  std::optional<RSState<S>> crossing;  // first state with r >= r_max
  std::vector<RSState<S>> backward;    // endpoint, G(endpoint), ..., crossing
  std::size_t t_hat = 0;               // index of `start` in `backward`
  S epsilon;
  S r_max;
};

/// Applies G from the endpoint until r >= r_max.
///
/// Throws ConstructionError with the failing step when an iterate leaves M~,
/// which in practice means the precision is exhausted.
template <class S>
Construction<S> alg1_construct(const Context<S>& ctx, const ConstructionParams<S>& params) {
  const S eps = params.epsilon ? *params.epsilon : choose_epsilon(ctx, params.horizon);
  const S r_max = params.r_max ? *params.r_max : ctx.ratio(1, 10);
  if (!(eps > 0.0) || eps > r_max || r_max > ctx.ratio(1, 10)) {
    throw InvalidArgument("alg1_construct: need 0 < epsilon <= r_max <= 1/10");
  }
  Construction<S> c;
  c.epsilon = eps;
  c.r_max = r_max;
  c.endpoint = {eps, 1.0 - ctx.ratio(4, 3) * eps + 2.0 * eps * eps, dynamics::Domain::Mtilde};
  c.backward.push_back(c.endpoint);

  // r grows at least geometrically along G; this bound is never reached on
  // sound runs and only guards against a stalled iteration.
  const std::size_t guard = 20 * (params.horizon + 100);
  RSState<S> u = c.endpoint;
  while (u.r < r_max) {
    if (c.backward.size() > guard) throw ConstructionError(c.backward.size(), "backward pass does not reach r_max");
    try {
      u = dynamics::backward_G(ctx, u);
    } catch (const DomainError& e) {
      throw ConstructionError(c.backward.size() - 1, e.what());
    }
    c.backward.push_back(u);
  }
  if (c.backward.size() == 1) {
    c.start = c.endpoint;
    c.t_hat = 0;
  } else {
    c.t_hat = c.backward.size() - 2;
    c.start = c.backward[c.t_hat];
    c.crossing = c.backward.back();
  }
  return c;
}

/// (r_t, s_t) = F^t(start) for t = 0..T. Stops early on termination; throws
/// DomainError when an iterate leaves M.
template <class S>
std::vector<RSState<S>> forward_replay(const Context<S>& ctx, const RSState<S>& start, std::size_t horizon) {
  if (!dynamics::in_M(ctx, start.r, start.s)) throw DomainError("forward_replay: start outside M");
  std::vector<RSState<S>> out;
  out.reserve(horizon + 1);
  out.push_back(start);
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto next = dynamics::try_forward_F(ctx, out.back());
    if (next.status == dynamics::StepStatus::DomainExit) {
      throw DomainError("forward_replay: left M at step " + std::to_string(t + 1));
    }
    out.push_back(next.state);
    if (next.status == dynamics::StepStatus::Terminated) break;
  }
  return out;
}

/// Largest componentwise gap between replay[t] and backward[t_hat - t].
template <class S>
S reversal_error(const Context<S>& ctx, const Construction<S>& c, const std::vector<RSState<S>>& replay) {
  using std::abs;
  S worst = ctx.num(0.0);
  const std::size_t n = std::min(replay.size(), c.t_hat + 1);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& b = c.backward[c.t_hat - t];
    const S dr = abs(replay[t].r - b.r);
    const S ds = abs(replay[t].s - b.s);
    if (dr > worst) worst = dr;
    if (ds > worst) worst = ds;
  }
  return worst;
}

/// Exact line search FW in polar form with every stepsize scaled by
/// (1 + rel), clamped to 1. Returns the (r_t, s_t) sequence.
template <class S>
std::vector<RSState<S>> perturbed_replay(const Context<S>& ctx, const RSState<S>& start, std::size_t horizon,
                                         double rel) {
  fwcore::PolarState<S> st{start.r, dynamics::reconstruct_theta(ctx, start)};
  std::vector<S> radii{st.r};
  for (std::size_t t = 0; t < horizon + 1; ++t) {
    S gamma = fwcore::ls_gamma(ctx, st) * (1.0 + rel);
    if (gamma > 1.0) gamma = ctx.num(1.0);
    const auto next = dynamics::polar_step(ctx, st, gamma);
    if (!next) break;
    st = *next;
    radii.push_back(st.r);
  }
  std::vector<RSState<S>> out;
  for (std::size_t t = 0; t + 1 < radii.size() && t <= horizon; ++t) {
    out.push_back({radii[t], radii[t + 1] / radii[t], dynamics::Domain::Unchecked});
  }
  return out;
}

struct CertifyOptions {
  double tol_c = 1e-6;         // 1e-6 Extended, 1e-3 Hardware
  bool check_r0_floor = true;  // start came from alg1_construct with r_max = 1/10
};

inline CertifyOptions default_certify_options(const PrecisionConfig& cfg) {
  return {cfg.is_extended() ? 1e-6 : 1e-3, true};
}

template <class S>
struct LowerBoundCertificate {
  S r0;
  S s0;
  std::size_t t_hat = 0;
  std::size_t horizon = 0;
  bool monotone_s = true;
  std::optional<std::size_t> first_decrease;  // first t with s_t < s_{t-1}
  bool residual_bound_ok = true;
  std::optional<std::size_t> first_residual_violation;
  bool c_range_ok = true;
  double c_min = std::numeric_limits<double>::quiet_NaN();
  double c_max = std::numeric_limits<double>::quiet_NaN();
  std::size_t c_samples = 0;
  std::optional<S> roundtrip_max_err;  // set by the caller from reversal_error
  double slope_estimate = std::numeric_limits<double>::quiet_NaN();
  bool r0_floor_ok = true;

  bool passes() const { return monotone_s && residual_bound_ok && c_range_ok && r0_floor_ok; }
};

/// Least-squares slope of log(r_t^2) against log t over integer t in
/// [ceil(T/10), T]; NaN with fewer than two usable points.
template <class S>
double gap_slope(const std::vector<RSState<S>>& replay, std::size_t horizon) {
  const std::size_t first = std::max<std::size_t>(1, (horizon + 9) / 10);
  const std::size_t last = std::min(horizon, replay.size() == 0 ? 0 : replay.size() - 1);
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t t = first; t <= last && last > 0; ++t) {
    const double r = to_double(replay[t].r);
    if (!(r > 0.0)) continue;
    const double x = std::log(static_cast<double>(t));
    const double y = 2.0 * std::log(r);
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Checks the lower-bound invariants on a replay of length >= T+1; failures
/// are recorded in the certificate, never thrown.
template <class S>
LowerBoundCertificate<S> certify(const Context<S>& ctx, const RSState<S>& start, const std::vector<RSState<S>>& replay,
                                 std::size_t horizon, const CertifyOptions& opt) {
  LowerBoundCertificate<S> cert;
  cert.r0 = start.r;
  cert.s0 = start.s;
  cert.horizon = horizon;
  const std::size_t len = std::min(replay.size(), horizon + 1);

  // s_0 <= s_1 <= ... <= s_{T-1}
  for (std::size_t t = 1; t < len && t < horizon; ++t) {
    if (replay[t].s < replay[t - 1].s) {
      cert.monotone_s = false;
      cert.first_decrease = t;
      break;
    }
  }

  const S rate = ctx.ratio(8, 3) * start.r;
  for (std::size_t t = 0; t < len; ++t) {
    const S bound = start.r / (1.0 + rate * static_cast<double>(t));
    if (replay[t].r < bound) {
      cert.residual_bound_ok = false;
      cert.first_residual_violation = t;
      break;
    }
  }

  const S tenth = ctx.ratio(1, 10);
  const S four_thirds = ctx.ratio(4, 3);
  for (std::size_t t = 0; t < len; ++t) {
    const auto& st = replay[t];
    if (st.r > tenth || !(st.r > 0.0)) continue;
    const double c = to_double((st.s - 1.0 + four_thirds * st.r) / (st.r * st.r));
    if (cert.c_samples == 0 || c < cert.c_min) cert.c_min = c;
    if (cert.c_samples == 0 || c > cert.c_max) cert.c_max = c;
    ++cert.c_samples;
    if (!(c >= 1.0 - opt.tol_c && c <= 2.5 + opt.tol_c)) cert.c_range_ok = false;
  }

  if (opt.check_r0_floor) cert.r0_floor_ok = !(start.r < ctx.ratio(1, 18) - opt.tol_c);
  cert.slope_estimate = gap_slope(replay, horizon);
  return cert;
}

/// Embeds (r0, reconstruct_theta(r0, s0)) in the plane and runs ambient exact
/// line search FW on the default ball instance with p = (0, 1).
template <class S>
fwcore::Trajectory<S> embedded_run(const Context<S>& ctx, const RSState<S>& start, std::size_t horizon) {
  const fwcore::PolarState<S> st{start.r, dynamics::reconstruct_theta(ctx, start)};
  const Vec<S> x0 = fwcore::embed_polar_2d(ctx, st);
  const auto inst = fwcore::make_ball(ctx, Vec<S>{ctx.num(0.0), ctx.num(1.0)});
  return fwcore::run_fw(ctx, inst, x0, fwcore::StepRule<S>::exact(), horizon, std::nullopt, true);
}

}  // namespace fwlb::worstcase
