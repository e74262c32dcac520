#include <doctest.h>

#include "fwlb/lemmas.hpp"
#include "fwlb/worstcase.hpp"
#include "oracle.hpp"

using namespace fwlb;
using dynamics::RSState;

namespace {

const HardwareContext hw;

}  // namespace

TEST_CASE("epsilon and precision schedule") {
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  CHECK(worstcase::choose_epsilon(ctx, 0) == ctx.ratio(1, 10));
  CHECK(worstcase::choose_epsilon(ctx, 30) == ctx.ratio(1, 90));
  CHECK(worstcase::choose_epsilon(ctx, 1000) == ctx.ratio(3, 8030));
  CHECK(worstcase::choose_epsilon(hw, 1000) == 3.0 / 8030.0);

  CHECK(worstcase::default_construction_bits(0) == 256);
  CHECK(worstcase::default_construction_bits(96) == 256);
  CHECK(worstcase::default_construction_bits(97) == 258);
  CHECK(worstcase::default_construction_bits(1000) == 2064);
}

TEST_CASE("construction endpoint and first backward state") {
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  worstcase::ConstructionParams<BigFloat> params;
  params.epsilon = ctx.ratio(1, 20);
  const auto c = worstcase::alg1_construct(ctx, params);
  CHECK(c.endpoint.r == ctx.ratio(1, 20));
  CHECK(oracle::rel_err(oracle::from(c.endpoint.s), oracle::Big(1) - oracle::Big(4) / 60 + oracle::Big(2) / 400) <=
        oracle::Big(std::ldexp(1.0, -250)));
  REQUIRE(c.backward.size() >= 2);
  CHECK(oracle::to_d(oracle::from(c.backward[1].r)) == doctest::Approx(0.0535529749).epsilon(1e-9));
  CHECK(oracle::to_d(oracle::from(c.backward[1].s)) == doctest::Approx(0.9336549486).epsilon(1e-9));
  CHECK(c.r_max == ctx.ratio(1, 10));
  CHECK(c.start.r < c.r_max);
  REQUIRE(c.crossing.has_value());
  CHECK_FALSE(c.crossing->r < c.r_max);
  CHECK(c.t_hat + 2 == c.backward.size());
}

TEST_CASE("backward pass agrees with the oracle recurrence") {
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  worstcase::ConstructionParams<BigFloat> params;
  params.horizon = 30;
  const auto c = worstcase::alg1_construct(ctx, params);

  const oracle::Big eps = oracle::Big(1) / 90;
  oracle::RS u{eps, 1 - oracle::Big(4) / 3 * eps + 2 * eps * eps};
  const oracle::Big tol(std::ldexp(1.0, -200));
  for (std::size_t k = 0; k < c.backward.size(); ++k) {
    REQUIRE(oracle::rel_err(oracle::from(c.backward[k].r), u.r) <= tol);
    REQUIRE(oracle::rel_err(oracle::from(c.backward[k].s), u.s) <= tol);
    u = oracle::G(u.r, u.s);
  }
  CHECK(c.t_hat >= 30);
}

TEST_CASE("epsilon at r_max gives an empty backward pass") {
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  worstcase::ConstructionParams<BigFloat> params;
  params.epsilon = ctx.ratio(1, 10);
  const auto c = worstcase::alg1_construct(ctx, params);
  CHECK(c.t_hat == 0);
  CHECK(c.backward.size() == 1);
  CHECK_FALSE(c.crossing.has_value());
  CHECK(c.start.r == c.endpoint.r);
  CHECK(c.start.s == c.endpoint.s);

  params.epsilon = ctx.ratio(1, 5);
  CHECK_THROWS_AS(worstcase::alg1_construct(ctx, params), InvalidArgument);
  params.epsilon = ctx.num(0.0);
  CHECK_THROWS_AS(worstcase::alg1_construct(ctx, params), InvalidArgument);
}

TEST_CASE("forward replay examples") {
  const auto a = worstcase::forward_replay(hw, RSState<double>{0.8, 5.0 / 12.0}, 1);
  REQUIRE(a.size() == 2);
  CHECK(a[0].r == 0.8);
  CHECK(a[1].r == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(a[1].s == doctest::Approx(0.75).epsilon(1e-12));

  const auto b = worstcase::forward_replay(hw, RSState<double>{1.0, 0.4}, 2);
  REQUIRE(b.size() == 3);
  const auto o1 = oracle::F(1, oracle::big("0.4"));
  const auto o2 = oracle::F(o1.r, o1.s);
  CHECK(b[1].s == doctest::Approx(oracle::to_d(o1.s)).epsilon(1e-14));
  CHECK(b[2].s == doctest::Approx(oracle::to_d(o2.s)).epsilon(1e-13));
  CHECK(b[1].s == doctest::Approx(0.707107).epsilon(1e-6));
  CHECK(b[2].s == doctest::Approx(0.434811).epsilon(1e-6));

  const auto c = worstcase::forward_replay(hw, RSState<double>{1.0, 0.4}, 0);
  CHECK(c.size() == 1);

  CHECK_THROWS_AS(worstcase::forward_replay(hw, RSState<double>{1.0, 0.6}, 3), DomainError);
}

TEST_CASE("single-point replay certifies with no slope") {
  const RSState<double> start{0.08, 1.0 - 4.0 / 3.0 * 0.08 + 2.0 * 0.0064};
  const std::vector<RSState<double>> replay{start};
  const auto cert = worstcase::certify(hw, start, replay, 0, worstcase::CertifyOptions{1e-3, true});
  CHECK(cert.passes());
  CHECK(std::isnan(cert.slope_estimate));
  CHECK(cert.c_samples == 1);
  CHECK(cert.c_min == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("gap slope of an exact 1/t sequence is -2") {
  std::vector<RSState<double>> seq;
  for (std::size_t t = 0; t <= 500; ++t) seq.push_back({1.0 / double(t + (t == 0)), 1.0});
  CHECK(worstcase::gap_slope(seq, 500) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::isnan(worstcase::gap_slope(seq, 1)));
}

TEST_CASE("certificate catches decrease, residual and r0 violations") {
  const worstcase::CertifyOptions opt{1e-6, true};
  const RSState<double> start{0.02, 0.5};
  const std::vector<RSState<double>> replay{start, {0.01, 0.4}, {0.004, 0.9}};
  const auto cert = worstcase::certify(hw, start, replay, 2, opt);
  CHECK_FALSE(cert.monotone_s);
  CHECK(cert.first_decrease == std::size_t{1});
  CHECK_FALSE(cert.residual_bound_ok);
  CHECK(cert.first_residual_violation == std::size_t{1});
  CHECK_FALSE(cert.c_range_ok);
  CHECK_FALSE(cert.r0_floor_ok);
  CHECK_FALSE(cert.passes());
}

TEST_CASE("T = 200 construction replays and certifies") {
  const std::size_t T = 200;
  const ExtendedContext ctx(PrecisionConfig::extended(worstcase::default_construction_bits(T)));
  worstcase::ConstructionParams<BigFloat> params;
  params.horizon = T;
  const auto c = worstcase::alg1_construct(ctx, params);
  CHECK(c.t_hat >= T);
  CHECK_FALSE(c.start.r < ctx.ratio(1, 18));
  CHECK(c.start.r < ctx.ratio(1, 10));

  const auto replay = worstcase::forward_replay(ctx, c.start, T);
  REQUIRE(replay.size() == T + 1);
  const auto cert = worstcase::certify(ctx, c.start, replay, T, worstcase::default_certify_options(ctx.config()));
  CHECK(cert.passes());
  CHECK(cert.c_min >= 1.0 - 1e-6);
  CHECK(cert.c_max <= 2.5 + 1e-6);
  // Independent fit over [T/10, T].
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t t = 20; t <= T; ++t) {
    const double x = std::log(double(t)), y = std::log(oracle::to_d(oracle::from(replay[t].r * replay[t].r)));
    n += 1, sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  CHECK(cert.slope_estimate == doctest::Approx((n * sxy - sx * sy) / (n * sxx - sx * sx)).epsilon(1e-9));
  CHECK(cert.slope_estimate < -1.5);

  // The replay retraces the backward pass.
  CHECK(worstcase::reversal_error(ctx, c, replay) < ctx.pow2(-100));

  // The polar run with unperturbed line search stepsizes is the same sequence.
  const auto polar = worstcase::perturbed_replay(ctx, c.start, 50, 0.0);
  REQUIRE(polar.size() == 51);
  for (std::size_t t = 0; t <= 50; ++t) {
    REQUIRE(abs(polar[t].r - replay[t].r) < ctx.pow2(-100));
    REQUIRE(abs(polar[t].s - replay[t].s) < ctx.pow2(-100));
  }
}

TEST_CASE("double-precision replay of the worst-case start breaks monotonicity") {
  const std::size_t T = 1000;
  const ExtendedContext ctx(PrecisionConfig::extended(worstcase::default_construction_bits(T)));
  worstcase::ConstructionParams<BigFloat> params;
  params.horizon = T;
  const auto c = worstcase::alg1_construct(ctx, params);
  const RSState<double> start{to_double(c.start.r), to_double(c.start.s)};
  std::vector<RSState<double>> replay;
  try {
    replay = worstcase::forward_replay(hw, start, T);
  } catch (const DomainError&) {
    return;  // leaving M is an even earlier break
  }
  const auto cert = worstcase::certify(hw, start, replay, T, worstcase::default_certify_options(hw.config()));
  CHECK_FALSE(cert.monotone_s);
  REQUIRE(cert.first_decrease.has_value());
  CHECK(*cert.first_decrease < T);
}

TEST_CASE("backward-map grid bounds hold at 256 bits") {
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  const auto floor = lemmas::xy_floor_grid(ctx, 30, 31, 1e-9);
  CHECK(floor.ok());
  CHECK(floor.points == 30 * 31);
  CHECK(floor.min_value >= 5.0 / 12.0 - 1e-9);

  // Same grid, naive formula on the oracle backend.
  double omin = 1e300;
  for (int i = 1; i <= 30; ++i) {
    const oracle::Big r = oracle::Big(i) / 90;
    for (int j = 0; j <= 30; ++j) {
      const oracle::Big s = oracle::Big(j) / 30 / (1 + r);
      const oracle::Big X = (1 + r) * s * s - r;
      const oracle::Big Y = sqrt((1 - s * s) * (1 - (1 + r) * (1 + r) * s * s));
      omin = std::min(omin, oracle::to_d(X + Y));
    }
  }
  CHECK(floor.min_value == doctest::Approx(omin).epsilon(1e-14));

  const auto band = lemmas::xy_band_grid(ctx, 20, 11, 1e-9);
  CHECK(band.ok());
  CHECK(band.min_value >= 0.0);
  const auto cp = lemmas::c_prime_grid(ctx, 20, 11, 1e-9);
  CHECK(cp.ok());
  CHECK(cp.min_value >= 1.0 - 1e-9);
  CHECK(cp.max_value <= 2.5 + 1e-9);
}

TEST_CASE("grid report with a violated bound records failures") {
  const ExtendedContext ctx(PrecisionConfig::extended(128));
  lemmas::GridReport empty;
  CHECK_FALSE(empty.ok());
  // Past r = 1/3 the floor is not claimed; a coarse grid there must fail.
  lemmas::GridReport rep;
  for (int i = 1; i <= 10; ++i) {
    const BigFloat r = ctx.num(0.9) + ctx.ratio(i, 100);
    const auto [x, y] = dynamics::backward_parts(ctx, RSState<BigFloat>{r, ctx.num(0.0)});
    ++rep.points;
    rep.observe(to_double(x + y));
    if (x + y < ctx.ratio(5, 12)) ++rep.failures;
  }
  CHECK(rep.failures > 0);
  CHECK_FALSE(rep.ok());
}
