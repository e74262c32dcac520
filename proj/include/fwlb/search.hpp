#pragma once

// Stable-phase length of forward trajectories and the two searches over the
// initial contraction s0: a uniform grid and the parity-guided bisection.

#include <cstddef>
#include <optional>
#include <type_traits>
#include <vector>

#include "fwlb/batch.hpp"
#include "fwlb/dynamics.hpp"
#include "fwlb/numeric.hpp"

namespace fwlb::search {

using dynamics::RSState;

template <class S>
struct SearchResult {
  S s0;
  std::size_t tau = 0;
  bool censored = false;           // tau reached the cap
  bool precision_limited = false;  // bisection midpoint no longer representable
  std::vector<RSState<S>> trace;   // (r_t, s_t) for t = 0..tau+1 when recorded
};

/// Largest k with s_0 <= s_1 <= ... <= s_k along forward_F, capped at `cap`.
///
/// Ties count as nondecreasing. A step that exits M or terminates ends the
/// count without extending it.
template <class S>
SearchResult<S> stable_phase_length(const Context<S>& ctx, const S& r0, const S& s0, std::size_t cap,
                                    bool keep_trace = false) {
  if (!dynamics::in_M(ctx, r0, s0)) {
    throw DomainError("stable_phase_length: start (" + ctx.format(r0) + ", " + ctx.format(s0) + ") outside M");
  }
  SearchResult<S> res{s0, 0, false, false, {}};
  RSState<S> st{r0, s0, dynamics::Domain::M};
  if (keep_trace) res.trace.push_back(st);
  while (res.tau < cap) {
    const auto out = dynamics::try_forward_F(ctx, st);
    if (out.status == dynamics::StepStatus::DomainExit) break;
    if (keep_trace) res.trace.push_back(out.state);
    if (out.status == dynamics::StepStatus::Terminated || out.state.s < st.s) break;
    ++res.tau;
    st = out.state;
  }
  res.censored = cap > 0 && res.tau == cap;
  return res;
}

/// i-th of n uniform samples of [0, sbar(r0)], as sbar(r0) * (i / (n-1)).
/// Grids with n-1 = 10^a and 10^b (a < b) are nested exactly.
template <class S>
S grid_point(const Context<S>& ctx, const S& r0, std::size_t i, std::size_t n) {
  return dynamics::sbar(ctx, r0) * ctx.ratio(static_cast<long long>(i), static_cast<long long>(n - 1));
}

/// tau for n uniform samples of s0 in [0, sbar(r0)]. Hardware mode runs on
/// the batch kernels.
template <class S>
std::vector<SearchResult<S>> grid_search(const Context<S>& ctx, const S& r0, std::size_t n, std::size_t cap) {
  if (n < 2) throw InvalidArgument("grid_search: n must be >= 2");
  std::vector<SearchResult<S>> out;
  out.reserve(n);
  if constexpr (std::is_same_v<S, double>) {
    std::vector<double> s0(n);
    for (std::size_t i = 0; i < n; ++i) s0[i] = grid_point(ctx, r0, i, n);
    const auto lengths = batch::stable_phase_lengths(r0, s0, cap);
    for (std::size_t i = 0; i < n; ++i) out.push_back({s0[i], lengths[i].tau, lengths[i].censored, false, {}});
  } else {
    for (std::size_t i = 0; i < n; ++i) out.push_back(stable_phase_length(ctx, r0, grid_point(ctx, r0, i, n), cap));
  }
  return out;
}

/// Parity-guided bisection for a long stable phase inside [lo, hi].
///
/// Keeps [l, m] when tau(m) and tau(u) share parity, else [m, u]. A censored
/// tau has unknown parity; then the half whose own midpoint has larger tau is
/// kept. Returns the probe with the largest tau (earliest on ties) with its
/// trace. Heuristic only.
template <class S>
SearchResult<S> bisection_search(const Context<S>& ctx, const S& r0, const S& lo, const S& hi, std::size_t iters,
                                 std::size_t cap) {
  if (!(lo < hi)) throw InvalidArgument("bisection_search: need lo < hi");
  auto probe = [&](const S& s) { return stable_phase_length(ctx, r0, s, cap); };

  S l = lo;
  S u = hi;
  auto best = probe(l);
  auto tau_u = probe(u);
  bool limited = false;
  auto consider = [&](const SearchResult<S>& r) {
    if (r.tau > best.tau) best = r;
  };
  consider(tau_u);

  for (std::size_t k = 0; k < iters; ++k) {
    const S m = (l + u) / 2.0;
    if (m == l || m == u) {
      limited = true;
      break;
    }
    const auto tau_m = probe(m);
    consider(tau_m);
    bool keep_left;
    if (!tau_m.censored && !tau_u.censored) {
      keep_left = (tau_m.tau % 2) == (tau_u.tau % 2);
    } else {
      const auto left = probe((l + m) / 2.0);
      const auto right = probe((m + u) / 2.0);
      consider(left);
      consider(right);
      keep_left = left.tau > right.tau;
    }
    if (keep_left) {
      u = m;
      tau_u = tau_m;
    } else {
      l = m;
    }
  }
  auto out = stable_phase_length(ctx, r0, best.s0, cap, true);
  out.precision_limited = limited;
  return out;
}

}  // namespace fwlb::search
