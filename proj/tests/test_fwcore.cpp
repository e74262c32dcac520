#include <doctest.h>

#include <random>

#include "fwlb/fwcore.hpp"
#include "oracle.hpp"

using namespace fwlb;
using fwcore::PolarState;
using fwcore::StepRule;

namespace {

const HardwareContext hw;
const Vec<double> p2{0.0, 1.0};

Vec<double> random_in_ball(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  Vec<double> x(d);
  for (auto& v : x) v = g(rng);
  const double scale = std::pow(u(rng), 1.0 / static_cast<double>(d)) / norm(x);
  for (auto& v : x) v *= scale;
  return x;
}

Vec<double> unit_p(std::size_t d) {
  Vec<double> p(d, 0.0);
  p.back() = 1.0;
  return p;
}

}  // namespace

TEST_CASE("lmo_ball") {
  const auto a = fwcore::lmo_ball(hw, Vec<double>{0.0, 0.0}, p2);
  CHECK(a[0] == 0.0);
  CHECK(a[1] == 1.0);
  const auto b = fwcore::lmo_ball(hw, Vec<double>{1.0, 0.0}, p2);
  CHECK(b[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(fwcore::lmo_ball(hw, p2, p2), Termination);
}

TEST_CASE("ls_gamma") {
  CHECK(fwcore::ls_gamma(hw, PolarState<double>{1.0, -0.5}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fwcore::ls_gamma(hw, PolarState<double>{1.0, -1.0}) == 1.0);
  CHECK(fwcore::ls_gamma(hw, PolarState<double>{0.5, -0.25}) == doctest::Approx(0.25).epsilon(1e-15));
  // close to collinear the step stays below 1 while r^2 << 1 + theta
  const double g = fwcore::ls_gamma(hw, PolarState<double>{2e-6, -1.0 + 1e-8});
  const oracle::Big og = oracle::ls_gamma(oracle::Big(2e-6), oracle::Big(-1.0 + 1e-8));
  CHECK(g == doctest::Approx(oracle::to_d(og)).epsilon(1e-9));
  CHECK(g < 1e-3);
}

TEST_CASE("to_polar") {
  const auto a = fwcore::to_polar(hw, Vec<double>{0.0, 0.0}, p2);
  CHECK(a.r == 1.0);
  CHECK(a.theta == -1.0);
  const auto b = fwcore::to_polar(hw, Vec<double>{1.0, 0.0}, p2);
  CHECK(b.r == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(b.theta == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
  const auto c = fwcore::to_polar(hw, Vec<double>{0.0, -1.0}, p2);
  CHECK(c.r == 2.0);
  CHECK(c.theta == -1.0);
  CHECK_THROWS_AS(fwcore::to_polar(hw, p2, p2), Termination);
}

TEST_CASE("short_step_gamma") {
  const Vec<double> x{1.0, 0.0};
  const auto v = fwcore::lmo_ball(hw, x, p2);
  const Vec<double> grad = scaled(2.0, x - p2);
  CHECK(fwcore::short_step_gamma(hw, x, v, grad, 2.0) ==
        doctest::Approx(fwcore::ls_gamma(hw, fwcore::to_polar(hw, x, p2))).epsilon(1e-15));
  // gradient orthogonal to x - v
  CHECK(fwcore::short_step_gamma(hw, Vec<double>{1.0, 0.0}, Vec<double>{-1.0, 0.0}, Vec<double>{0.0, 3.0}, 2.0) == 0.0);
  // ratio above one clamps
  CHECK(fwcore::short_step_gamma(hw, Vec<double>{1.0, 0.0}, Vec<double>{0.0, 0.0}, Vec<double>{10.0, 0.0}, 1.0) == 1.0);
  CHECK_THROWS_AS(fwcore::short_step_gamma(hw, x, x, grad, 2.0), DegenerateDirection);
}

TEST_CASE("two-step termination with gamma0 = r0/(1+r0), gamma1 = 1") {
  const auto inst = fwcore::make_ball(hw, p2);
  const double r0 = std::sqrt(2.0);
  const auto traj = fwcore::run_fw(hw, inst, Vec<double>{1.0, 0.0}, StepRule<double>::fixed({r0 / (1.0 + r0), 1.0}), 2,
                                   std::nullopt, true);
  REQUIRE(traj.records.size() == 3);
  CHECK(traj.records[2].gap <= std::ldexp(1.0, -40));
  CHECK(norm(*traj.records[2].x - p2) <= 1e-12);

  const ExtendedContext ctx(PrecisionConfig::extended(256));
  const auto ie = fwcore::make_ball(ctx, Vec<BigFloat>{ctx.num(0.0), ctx.num(1.0)});
  const BigFloat re = sqrt(ctx.num(2.0));
  const auto te = fwcore::run_fw(ctx, ie, Vec<BigFloat>{ctx.num(1.0), ctx.num(0.0)},
                                 StepRule<BigFloat>::fixed({re / (1.0 + re), ctx.num(1.0)}), 2);
  CHECK(te.records.back().gap <= ctx.pow2(-200));
}

TEST_CASE("zero schedule leaves the iterate fixed") {
  const auto inst = fwcore::make_ball(hw, p2);
  const auto traj = fwcore::run_fw(hw, inst, Vec<double>{0.3, -0.2}, StepRule<double>::fixed(std::vector<double>(5, 0.0)),
                                   5, std::nullopt, true);
  REQUIRE(traj.records.size() == 6);
  for (const auto& rec : traj.records) {
    CHECK((*rec.x)[0] == 0.3);
    CHECK((*rec.x)[1] == -0.2);
  }
  CHECK_THROWS_AS(fwcore::run_fw(hw, inst, Vec<double>{0.3, -0.2}, StepRule<double>::fixed({0.0}), 5), InvalidArgument);
}

TEST_CASE("first exact line search step from (1, 0)") {
  const auto inst = fwcore::make_ball(hw, p2);
  const auto traj = fwcore::run_fw(hw, inst, Vec<double>{1.0, 0.0}, StepRule<double>::exact(), 1);
  const double r0 = std::sqrt(2.0), th = -1.0 / std::sqrt(2.0);
  const double r1_sq = r0 * r0 * (1.0 - th * th) / ((1.0 + r0) * (1.0 + r0) + 1.0 + 2.0 * (1.0 + r0) * th);
  CHECK(traj.records[1].r * traj.records[1].r == doctest::Approx(r1_sq).epsilon(1e-14));

  const auto step = oracle::ambient_ls_step({oracle::Big(1), oracle::Big(0)});
  CHECK(traj.records[1].r == doctest::Approx(oracle::to_d(oracle::polar_of(step).r)).epsilon(1e-14));
}

TEST_CASE("ambient trajectory matches the oracle simulation at 256 bits") {
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  const auto inst = fwcore::make_ball(ctx, Vec<BigFloat>{ctx.num(0.0), ctx.num(1.0)});
  const auto traj = fwcore::run_fw(ctx, inst, Vec<BigFloat>{ctx.num(0.6), ctx.num(-0.3)}, StepRule<BigFloat>::exact(), 40,
                                   std::nullopt, true);
  oracle::P2 x{oracle::big("0.6"), oracle::big("-0.3")};
  // both sides start from the 256-bit roundings of 0.6 and -0.3
  x = {oracle::from(ctx.num(0.6)), oracle::from(ctx.num(-0.3))};
  for (std::size_t t = 0; t < traj.records.size(); ++t) {
    const auto& xr = *traj.records[t].x;
    CHECK(abs(oracle::from(xr[0]) - x.x) <= oracle::Big(1e-60));
    CHECK(abs(oracle::from(xr[1]) - x.y) <= oracle::Big(1e-60));
    x = oracle::ambient_ls_step(x);
  }
}

TEST_CASE("start at p is an empty trajectory") {
  const auto inst = fwcore::make_ball(hw, p2);
  const auto traj = fwcore::run_fw(hw, inst, p2, StepRule<double>::exact(), 10);
  REQUIRE(traj.records.size() == 1);
  CHECK(traj.records[0].gap == 0.0);
  CHECK(traj.stop == fwcore::StopReason::Terminated);
}

TEST_CASE("collinear start terminates in one step") {
  const auto inst = fwcore::make_ball(hw, p2);
  const auto traj = fwcore::run_fw(hw, inst, Vec<double>{0.0, -0.5}, StepRule<double>::exact(), 10);
  REQUIRE(traj.records.size() == 2);
  CHECK(traj.records[0].gamma == 1.0);
  CHECK(traj.stop == fwcore::StopReason::Terminated);
}

TEST_CASE("infeasible starts and bad instances") {
  const auto inst = fwcore::make_ball(hw, p2);
  CHECK_THROWS_AS(fwcore::run_fw(hw, inst, Vec<double>{1.0, 1.0}, StepRule<double>::exact(), 5), InfeasibleStart);
  CHECK_THROWS_AS(fwcore::run_fw(hw, inst, Vec<double>{0.0, 0.0, 0.0}, StepRule<double>::exact(), 5), InvalidArgument);
  CHECK_THROWS_AS(fwcore::make_ball(hw, Vec<double>{0.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(fwcore::make_ball(hw, Vec<double>{1.0}), InvalidArgument);
}

TEST_CASE("property: sandwich, monotone residual, feasibility") {
  std::mt19937_64 rng(3);
  const auto inst = fwcore::make_ball(hw, p2);
  for (int k = 0; k < 100; ++k) {
    const auto traj = fwcore::run_fw(hw, inst, random_in_ball(rng, 2), StepRule<double>::exact(), 2000, std::nullopt, true);
    const double r0 = traj.records.front().r;
    for (std::size_t t = 0; t < traj.records.size(); ++t) {
      const auto& rec = traj.records[t];
      REQUIRE(rec.r <= 1.0 / (static_cast<double>(t) + 1.0 / r0) * (1.0 + std::ldexp(1.0, -40)));
      REQUIRE(norm(*rec.x) <= 1.0 + hw.slack());
      REQUIRE(rec.gap == doctest::Approx(rec.r * rec.r).epsilon(1e-9));
      if (t + 1 < traj.records.size()) {
        // r is read off |x - p| with |x| ~ 1, so it carries ~1e-16 absolute error
        REQUIRE(traj.records[t + 1].r <= rec.r / (1.0 + rec.r) * (1.0 + 1e-12) + 1e-15);
      }
    }
  }
}

TEST_CASE("property: iterates stay in span{p, x0}") {
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  std::mt19937_64 rng(4);
  for (std::size_t d : {2u, 3u, 5u}) {
    Vec<BigFloat> p(d, ctx.num(0.0));
    p.back() = ctx.num(1.0);
    const auto inst = fwcore::make_ball(ctx, p);
    for (int k = 0; k < 5; ++k) {
      Vec<BigFloat> x0;
      for (double v : random_in_ball(rng, d)) x0.push_back(ctx.num(v));
      // orthonormal basis of span{p, x0}
      const BigFloat a = dot(x0, p);
      Vec<BigFloat> q = x0 - scaled(a, p);
      q = scaled(BigFloat(1.0 / norm(q)), q);
      const auto traj = fwcore::run_fw(ctx, inst, x0, StepRule<BigFloat>::exact(), 100, std::nullopt, true);
      for (const auto& rec : traj.records) {
        const auto& x = *rec.x;
        const Vec<BigFloat> off = x - scaled(dot(x, p), p) - scaled(dot(x, q), q);
        REQUIRE(norm(off) <= ctx.slack());
      }
    }
  }
}

TEST_CASE("property: short step and exact line search coincide on the ball") {
  std::mt19937_64 rng(5);
  const auto inst = fwcore::make_ball(hw, unit_p(3));
  for (int k = 0; k < 20; ++k) {
    const auto x0 = random_in_ball(rng, 3);
    const auto a = fwcore::run_fw(hw, inst, x0, StepRule<double>::exact(), 200);
    const auto b = fwcore::run_fw(hw, inst, x0, StepRule<double>::short_step(), 200);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t t = 0; t < a.records.size(); ++t) REQUIRE(std::abs(a.records[t].r - b.records[t].r) <= hw.slack());
  }
}

TEST_CASE("interior and exterior regimes converge linearly") {
  for (double kappa : {0.5, 2.0}) {
    const auto inst = fwcore::make_ball(hw, p2, 1.0, 2.0, kappa);
    const auto traj = fwcore::run_fw(hw, inst, Vec<double>{0.7, -0.4}, StepRule<double>::exact(), 300);
    const auto& rec = traj.records;
    for (std::size_t t = 10; t + 20 < rec.size(); ++t) {
      if (rec[t].gap > 1e-250) REQUIRE(rec[t + 20].gap <= 0.9 * rec[t].gap);
    }
    CHECK(rec.back().gap < 1e-12);
  }
}

TEST_CASE("ellipsoid geometry and the ball mapping") {
  fwcore::EllipsoidInstance<double> id{Mat<double>(2, 0.0), 1.0, Vec<double>{0.0, -1.0}};
  id.A(0, 0) = id.A(1, 1) = 1.0;
  const auto m0 = fwcore::map_to_ball(hw, id);
  CHECK(m0.phi(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(m0.phi(0, 1)) < 1e-15);
  CHECK(m0.ball.p[1] == doctest::Approx(1.0));
  CHECK(m0.boundary_optimizer);

  fwcore::EllipsoidInstance<double> e{Mat<double>(2, 0.0), 1.0, Vec<double>{0.0, -1.0}};
  e.A(0, 0) = 4.0;
  e.A(1, 1) = 1.0;
  const auto m1 = fwcore::map_to_ball(hw, e);
  CHECK(m1.phi(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m1.phi(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m1.ball.p[0] == doctest::Approx(0.0));
  CHECK(m1.ball.p[1] == doctest::Approx(1.0).epsilon(1e-14));

  // c = -2 A^{1/2} (1, 0) with alpha = 2 puts the target at (1, 0)
  fwcore::EllipsoidInstance<double> f{e.A, 2.0, Vec<double>{-4.0, 0.0}};
  const auto m2 = fwcore::map_to_ball(hw, f);
  CHECK(m2.ball.p[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(m2.ball.p[1]) < 1e-14);
  CHECK(m2.ball.target_scale == doctest::Approx(1.0).epsilon(1e-14));

  fwcore::EllipsoidInstance<double> bad{Mat<double>(2, 0.0), 1.0, Vec<double>{0.0, -1.0}};
  bad.A(0, 0) = 1.0;
  CHECK_THROWS_AS(fwcore::map_to_ball(hw, bad), InvalidArgument);
}

TEST_CASE("affine equivalence") {
  fwcore::EllipsoidInstance<double> id{Mat<double>(2, 0.0), 1.0, Vec<double>{0.0, -1.0}};
  id.A(0, 0) = id.A(1, 1) = 1.0;
  const auto r0 = fwcore::verify_affine_equivalence(hw, id, Vec<double>{0.3, -0.5}, 50);
  CHECK(r0.max_gap_deviation <= 1e-15);
  CHECK(r0.max_point_deviation <= 1e-15);

  fwcore::EllipsoidInstance<double> e{Mat<double>(2, 0.0), 1.0, Vec<double>{0.0, -1.0}};
  e.A(0, 0) = 4.0;
  e.A(1, 1) = 1.0;
  const auto r1 = fwcore::verify_affine_equivalence(hw, e, Vec<double>{0.3, -0.5}, 50);
  CHECK(r1.compared_steps == 51);
  CHECK(r1.max_gap_deviation <= 1e-8);
  CHECK(r1.max_point_deviation <= 1e-8);

  // condition number 1e6, rotated
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  const BigFloat c = oracle::to_bf(cos(oracle::big("0.3")), 256);
  const BigFloat s = oracle::to_bf(sin(oracle::big("0.3")), 256);
  Mat<BigFloat> A(2, ctx.num(0.0));
  const BigFloat l1 = ctx.num(1e6), l2 = ctx.num(1.0);
  A(0, 0) = c * c * l1 + s * s * l2;
  A(1, 1) = s * s * l1 + c * c * l2;
  A(0, 1) = A(1, 0) = c * s * (l1 - l2);
  fwcore::EllipsoidInstance<BigFloat> big{A, ctx.num(1.0), Vec<BigFloat>{ctx.num(-100.0), ctx.num(-1.0)}};
  const BigFloat xs = ctx.num(1e-4);
  const auto r2 = fwcore::verify_affine_equivalence(ctx, big, Vec<BigFloat>{xs * 0.2, xs * 0.3}, 50);
  CHECK(r2.max_gap_deviation <= ctx.pow2(-200) * 1e6);
  CHECK(r2.max_point_deviation <= ctx.pow2(-200) * 1e6);
}

TEST_CASE("ellipsoid LMO stays on the boundary") {
  fwcore::EllipsoidInstance<double> e{Mat<double>(2, 0.0), 1.0, Vec<double>{0.5, -1.0}};
  e.A(0, 0) = 4.0;
  e.A(1, 1) = 1.0;
  e.A(0, 1) = e.A(1, 0) = 0.5;
  const auto traj = fwcore::run_fw(hw, e, Vec<double>{0.1, 0.1}, StepRule<double>::exact(), 100, std::nullopt, true);
  for (const auto& rec : traj.records) REQUIRE(dot(*rec.x, e.A * *rec.x) <= 1.0 + 1e-12);
  for (std::size_t t = 1; t < traj.records.size(); ++t) REQUIRE(traj.records[t].gap <= traj.records[t - 1].gap + 1e-15);
}
