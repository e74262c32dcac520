#pragma once

// Grid checks of the backward-map bounds that keep the construction on the
// stable trajectory s = 1 - (4/3) r + c r^2 with c in [1, 5/2].

#include <cstddef>
#include <limits>

#include "fwlb/dynamics.hpp"
#include "fwlb/numeric.hpp"

namespace fwlb::lemmas {

struct GridReport {
  std::size_t points = 0;
  std::size_t failures = 0;
  double min_value = std::numeric_limits<double>::infinity();
  double max_value = -std::numeric_limits<double>::infinity();

  bool ok() const { return points > 0 && failures == 0; }
  void observe(double v) {
    if (v < min_value) min_value = v;
    if (v > max_value) max_value = v;
  }
};

/// r_i = i/(10 nr) for i = 1..nr and c_j = 1 + (3/2) j/(nc-1) for j = 0..nc-1.
template <class S, class Fn>
void for_each_rc(const Context<S>& ctx, std::size_t nr, std::size_t nc, Fn&& fn) {
  for (std::size_t i = 1; i <= nr; ++i) {
    const S r = ctx.ratio(static_cast<long long>(i), static_cast<long long>(10 * nr));
    for (std::size_t j = 0; j < nc; ++j) {
      const S c = 1.0 + ctx.ratio(3 * static_cast<long long>(j), 2 * static_cast<long long>(nc - 1));
      fn(r, c);
    }
  }
}

/// X + Y >= 5/12 on r_i = i/(3 nr), s_j = (j/(ns-1)) / (1 + r_i). Records min/max of X + Y.
template <class S>
GridReport xy_floor_grid(const Context<S>& ctx, std::size_t nr, std::size_t ns, double tol) {
  GridReport rep;
  const S floor = ctx.ratio(5, 12) - tol;
  for (std::size_t i = 1; i <= nr; ++i) {
    const S r = ctx.ratio(static_cast<long long>(i), static_cast<long long>(3 * nr));
    for (std::size_t j = 0; j < ns; ++j) {
      const S s = ctx.ratio(static_cast<long long>(j), static_cast<long long>(ns - 1)) / (1.0 + r);
      const auto [x, y] = dynamics::backward_parts(ctx, dynamics::RSState<S>{r, s});
      const S xy = x + y;
      ++rep.points;
      rep.observe(to_double(xy));
      if (xy < floor) ++rep.failures;
    }
  }
  return rep;
}

/// X + Y within [base - 5 r^3, base + 2 r^3], base = 1 - (4/3) r + (11/9 - c/2) r^2.
/// min/max record the smaller of the two margins divided by r^3.
template <class S>
GridReport xy_band_grid(const Context<S>& ctx, std::size_t nr, std::size_t nc, double tol) {
  GridReport rep;
  for_each_rc(ctx, nr, nc, [&](const S& r, const S& c) {
    const S r2 = r * r;
    const S r3 = r2 * r;
    const S s = 1.0 - ctx.ratio(4, 3) * r + c * r2;
    const auto [x, y] = dynamics::backward_parts(ctx, dynamics::RSState<S>{r, s});
    const S base = 1.0 - ctx.ratio(4, 3) * r + (ctx.ratio(11, 9) - c / 2.0) * r2;
    const S xy = x + y;
    const S lower_margin = xy - (base - 5.0 * r3);
    const S upper_margin = (base + 2.0 * r3) - xy;
    ++rep.points;
    const S m = lower_margin < upper_margin ? lower_margin : upper_margin;
    rep.observe(to_double(m / r3));
    if (lower_margin < -tol || upper_margin < -tol) ++rep.failures;
  });
  return rep;
}

/// One backward step from s = 1 - (4/3) r + c r^2 lands at c' in [1, 5/2].
template <class S>
GridReport c_prime_grid(const Context<S>& ctx, std::size_t nr, std::size_t nc, double tol) {
  GridReport rep;
  for_each_rc(ctx, nr, nc, [&](const S& r, const S& c) {
    const S s = 1.0 - ctx.ratio(4, 3) * r + c * r * r;
    const auto prev = dynamics::backward_G(ctx, dynamics::RSState<S>{r, s});
    const S cp = (prev.s - 1.0 + ctx.ratio(4, 3) * prev.r) / (prev.r * prev.r);
    const double v = to_double(cp);
    ++rep.points;
    rep.observe(v);
    if (v < 1.0 - tol || v > 2.5 + tol) ++rep.failures;
  });
  return rep;
}

}  // namespace fwlb::lemmas
