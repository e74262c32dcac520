#include "fwlb/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "fwlb/batch.hpp"
#include "fwlb/dynamics.hpp"
#include "fwlb/experiments.hpp"
#include "fwlb/fwcore.hpp"
#include "fwlb/lemmas.hpp"
#include "fwlb/search.hpp"
#include "fwlb/worstcase.hpp"

namespace fwlb::verify {

namespace {

using dynamics::RSState;

struct Runner {
  const Options& opt;
  std::vector<Check>& out;
  std::string suite;

  void check(const std::string& name, const std::function<bool(std::string&)>& fn, bool warning_only = false) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    c.suite = suite;
    c.name = name;
    c.warning_only = warning_only;
    try {
      c.pass = fn(c.detail);
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(c));
  }
};

std::string fmt(double v) { return io::format_double(v); }

template <class S>
S random_scalar(const Context<S>& ctx, std::mt19937_64& rng) {
  // fills the whole mantissa with 53-bit chunks
  std::uniform_real_distribution<double> u(0.0, 1.0);
  S x = ctx.num(u(rng));
  S scale = ctx.num(1.0);
  for (int filled = 53; filled < ctx.bits(); filled += 53) {
    scale = scale * std::ldexp(1.0, -53);
    x = x + scale * u(rng);
  }
  return x;
}

template <class S>
RSState<S> sample_M(const Context<S>& ctx, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const S r = ctx.num(2.0 * (1.0 - u(rng)));  // (0, 2]
  return {r, dynamics::sbar(ctx, r) * u(rng), dynamics::Domain::M};
}

template <class S>
RSState<S> sample_Mtilde(const Context<S>& ctx, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const S r = ctx.ratio(1, 3) * (1.0 - u(rng));  // (0, 1/3]
  return {r, u(rng) / (1.0 + r), dynamics::Domain::Mtilde};
}

// --------------------------------------------------------------------------

template <class S>
void numeric_suite(const Context<S>& ctx, Runner& run) {
  run.check("decimal_roundtrip_1000", [&](std::string& d) {
    std::mt19937_64 rng(run.opt.seed);
    std::size_t bad = 0;
    for (int i = 0; i < 1000; ++i) {
      std::uniform_int_distribution<int> ex(-60, 60);
      const S x = random_scalar(ctx, rng) * std::ldexp(1.0, ex(rng));
      if (!(ctx.parse(ctx.format(x)) == x)) ++bad;
    }
    d = std::to_string(bad) + " mismatches at " + std::to_string(ctx.config().decimal_digits()) + " digits";
    return bad == 0;
  });
  run.check("sqrt_square_1000", [&](std::string& d) {
    std::mt19937_64 rng(run.opt.seed + 1);
    std::uniform_int_distribution<int> ex(-64, 63);
    const S rel = ctx.pow2(-(ctx.bits() - 4));
    std::size_t bad = 0;
    for (int i = 0; i < 1000; ++i) {
      const S x = (1.0 + random_scalar(ctx, rng)) * std::ldexp(1.0, ex(rng));
      const S y = sqrt(x);
      const S sq = y * y;
      if (sq < x * (1.0 - rel) || sq > x * (1.0 + rel)) ++bad;
    }
    d = std::to_string(bad) + " outside 2^-(bits-4)";
    return bad == 0;
  });
  run.check("extended_1024_resolves_2^-1000", [&](std::string& d) {
    const ExtendedContext wide(PrecisionConfig::extended(1024));
    const BigFloat diff = (wide.num(1.0) + wide.pow2(-1000)) - 1.0;
    d = "(1 + 2^-1000) - 1 = " + wide.format(diff);
    return !diff.is_zero();
  });
}

template <class S>
void dynamics_suite(const Context<S>& ctx, Runner& run) {
  const std::size_t n = run.opt.samples;
  run.check("forward_maps_M_into_M", [&](std::string& d) {
    std::mt19937_64 rng(run.opt.seed + 10);
    std::size_t bad = 0, terminated = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto out = dynamics::try_forward_F(ctx, sample_M(ctx, rng));
      if (out.status == dynamics::StepStatus::Terminated) {
        ++terminated;
        continue;
      }
      if (out.status != dynamics::StepStatus::Ok || !dynamics::in_M(ctx, out.state.r, out.state.s)) ++bad;
    }
    d = std::to_string(n) + " samples, " + std::to_string(bad) + " left M, " + std::to_string(terminated) +
        " terminated";
    return bad == 0;
  });
  run.check("roundtrip_F_after_G", [&](std::string& d) {
    std::mt19937_64 rng(run.opt.seed + 11);
    // F at G(r, s) loses digits like 1/r^2 as r -> 0 (numerator and
    // denominator both O(r^2)) and like 1/s^2 as s -> 0 (numerator O(s^2)), so
    // the s error is scaled by min(r, 1/16)^2 min(s, 1/16)^2.
    const double tol = std::ldexp(1.0, -(ctx.bits() - 10));
    double worst_r = 0, worst_s = 0, worst_raw = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto st = sample_Mtilde(ctx, rng);
      const auto back = dynamics::forward_F(ctx, dynamics::backward_G(ctx, st));
      worst_r = std::max(worst_r, to_double(abs(back.r - st.r) / st.r));
      const double es = to_double(abs(back.s - st.s) / st.s);
      worst_raw = std::max(worst_raw, es);
      const double cr = std::min(to_double(st.r), 0.0625);
      const double cs = std::min(to_double(st.s), 0.0625);
      worst_s = std::max(worst_s, es * cr * cr * cs * cs);
    }
    d = "max rel err r " + fmt(worst_r) + ", s scaled " + fmt(worst_s) + ", s raw " + fmt(worst_raw) + ", tol " +
        fmt(tol);
    return worst_r <= tol && worst_s <= tol;
  });
  run.check("xy_at_least_5/12", [&](std::string& d) {
    std::mt19937_64 rng(run.opt.seed + 12);
    double lo = 1e9;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [x, y] = dynamics::backward_parts(ctx, sample_Mtilde(ctx, rng));
      lo = std::min(lo, to_double(x + y));
    }
    d = "min X+Y " + fmt(lo);
    return lo >= 5.0 / 12.0 - 1e-12;
  });
  run.check("monotone_condition_matches_G", [&](std::string& d) {
    std::mt19937_64 rng(run.opt.seed + 13);
    std::size_t bad = 0, ties = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto st = sample_Mtilde(ctx, rng);
      const S diff = st.s - dynamics::backward_G(ctx, st).s;
      if (!(abs(diff) > ctx.slack())) {
        ++ties;
        continue;
      }
      if (dynamics::monotone_condition(st) != (diff >= 0.0)) ++bad;
    }
    d = std::to_string(bad) + " disagreements, " + std::to_string(ties) + " near-ties skipped";
    return bad == 0;
  });
  run.check("theta_reconstruction_one_step", [&](std::string& d) {
    std::mt19937_64 rng(run.opt.seed + 14);
    const auto inst = fwcore::make_ball(ctx, Vec<S>{ctx.num(0.0), ctx.num(1.0)});
    double worst = 0;
    const std::size_t m = std::min<std::size_t>(n, 2000);
    for (std::size_t i = 0; i < m; ++i) {
      const auto st = sample_M(ctx, rng);
      const fwcore::PolarState<S> ps{st.r, dynamics::reconstruct_theta(ctx, st)};
      const auto traj = fwcore::run_fw(ctx, inst, fwcore::embed_polar_2d(ctx, ps), fwcore::StepRule<S>::exact(), 1);
      const S r1 = traj.records.size() > 1 ? traj.records[1].r : ctx.num(0.0);
      worst = std::max(worst, to_double(abs(r1 / st.r - st.s)));
    }
    d = "max |s_recovered - s| " + fmt(worst);
    return worst <= 1e-6;
  });
  run.check("jump_characterization_1000x200", [&](std::string& d) {
    std::mt19937_64 rng(run.opt.seed + 15);
    const HardwareContext hw;
    std::vector<double> r0, s0;
    for (int i = 0; i < 1000; ++i) {
      const auto st = sample_M(hw, rng);
      r0.push_back(st.r);
      s0.push_back(st.s);
    }
    const auto rep = batch::jump_sweep(r0, s0, 200);
    d = std::to_string(rep.jumps) + " jumps, " + std::to_string(rep.violations) + " violations, " +
        std::to_string(rep.steps) + " steps";
    return rep.violations == 0;
  });
}

template <class S>
void fwcore_suite(const Context<S>& ctx, Runner& run) {
  std::mt19937_64 rng(run.opt.seed + 20);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_start = [&](std::size_t d) {
    Vec<S> x(d, ctx.num(0.0));
    double n2;
    std::vector<double> raw(d);
    do {
      n2 = 0;
      for (auto& v : raw) {
        v = u(rng);
        n2 += v * v;
      }
    } while (n2 > 1.0 || n2 == 0.0);
    for (std::size_t i = 0; i < d; ++i) x[i] = ctx.num(raw[i]);
    return x;
  };
  auto unit_p = [&](std::size_t d) {
    Vec<S> p(d, ctx.num(0.0));
    p.back() = ctx.num(1.0);
    return p;
  };
  const std::size_t horizon = 200;

  run.check("upper_bound_sandwich_100", [&](std::string& d) {
    const auto inst = fwcore::make_ball(ctx, unit_p(2));
    std::size_t bad = 0;
    for (int k = 0; k < 100; ++k) {
      const auto traj = fwcore::run_fw(ctx, inst, random_start(2), fwcore::StepRule<S>::exact(), horizon);
      const S r0 = traj.records.front().r;
      for (const auto& rec : traj.records) {
        if (!(rec.r > ctx.slack())) break;
        if (rec.r > (1.0 + std::ldexp(1.0, -40)) / (static_cast<double>(rec.t) + 1.0 / r0)) ++bad;
      }
    }
    d = std::to_string(bad) + " violations of r_t <= 1/(t + 1/r0)";
    return bad == 0;
  });
  run.check("monotone_residual_and_feasibility", [&](std::string& d) {
    const auto inst = fwcore::make_ball(ctx, unit_p(2));
    std::size_t bad_r = 0, bad_x = 0;
    for (int k = 0; k < 20; ++k) {
      const auto traj =
          fwcore::run_fw(ctx, inst, random_start(2), fwcore::StepRule<S>::exact(), horizon, std::nullopt, true);
      for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
        const S& r = traj.records[t].r;
        if (traj.records[t + 1].r > r / (1.0 + r) * (1.0 + std::ldexp(1.0, -40))) ++bad_r;
        if (norm(*traj.records[t].x) > 1.0 + ctx.slack()) ++bad_x;
      }
    }
    d = std::to_string(bad_r) + " residual, " + std::to_string(bad_x) + " feasibility violations";
    return bad_r == 0 && bad_x == 0;
  });
  run.check("invariant_subspace_d235", [&](std::string& d) {
    double worst = 0;
    for (std::size_t dim : {2u, 3u, 5u}) {
      const auto inst = fwcore::make_ball(ctx, unit_p(dim));
      for (int k = 0; k < 10; ++k) {
        const Vec<S> x0 = random_start(dim);
        const auto traj = fwcore::run_fw(ctx, inst, x0, fwcore::StepRule<S>::exact(), 100, std::nullopt, true);
        // orthonormal basis {p, w} of span{p, x0}
        const Vec<S> p = inst.p;
        Vec<S> w = x0 - scaled(dot(x0, p), p);
        const S wn = norm(w);
        if (!(wn > 0.0)) continue;
        w = scaled(S(1.0 / wn), w);
        for (const auto& rec : traj.records) {
          const Vec<S>& x = *rec.x;
          const Vec<S> resid = x - scaled(dot(x, p), p) - scaled(dot(x, w), w);
          worst = std::max(worst, to_double(norm(resid)));
        }
      }
    }
    d = "max off-plane component " + fmt(worst);
    return worst <= std::ldexp(1.0, -(ctx.bits() / 2));
  });
  run.check("short_step_equals_line_search", [&](std::string& d) {
    const auto inst = fwcore::make_ball(ctx, unit_p(3));
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
      const Vec<S> x0 = random_start(3);
      const auto a = fwcore::run_fw(ctx, inst, x0, fwcore::StepRule<S>::exact(), 100);
      const auto b = fwcore::run_fw(ctx, inst, x0, fwcore::StepRule<S>::short_step(), 100);
      const std::size_t m = std::min(a.records.size(), b.records.size());
      for (std::size_t t = 0; t < m; ++t) worst = std::max(worst, to_double(abs(a.records[t].r - b.records[t].r)));
      if (a.records.size() != b.records.size()) worst = std::max(worst, 1.0);
    }
    d = "max |r_exact - r_short| " + fmt(worst);
    return worst <= 1e-9;
  });
  run.check("affine_equivalence_diag41", [&](std::string& d) {
    fwcore::EllipsoidInstance<S> inst{Mat<S>(2, ctx.num(0.0)), ctx.num(1.0), Vec<S>{ctx.num(0.0), ctx.num(-1.0)}};
    inst.A(0, 0) = ctx.num(4.0);
    inst.A(1, 1) = ctx.num(1.0);
    const auto rep = fwcore::verify_affine_equivalence(ctx, inst, Vec<S>{ctx.num(0.3), ctx.num(-0.5)}, 50);
    d = "gap dev " + ctx.format(rep.max_gap_deviation) + ", point dev " + ctx.format(rep.max_point_deviation);
    return rep.max_gap_deviation <= 1e-8 && rep.max_point_deviation <= 1e-8;
  });
}

template <class S>
void search_suite(const Context<S>& ctx, Runner& run) {
  run.check("tau_matches_replay_count", [&](std::string& d) {
    std::size_t bad = 0;
    const S r0 = ctx.num(1.0);
    for (std::size_t i = 0; i <= 50; ++i) {
      const S s0 = search::grid_point(ctx, r0, i, 51);
      const auto res = search::stable_phase_length(ctx, r0, s0, 500);
      const auto replay = worstcase::forward_replay(ctx, dynamics::RSState<S>{r0, s0}, res.tau + 1);
      std::size_t k = 0;
      while (k + 1 < replay.size() && !(replay[k + 1].s < replay[k].s) && replay[k + 1].r > 0.0) ++k;
      if (k != res.tau) ++bad;
    }
    d = std::to_string(bad) + " mismatches on 51 grid starts";
    return bad == 0;
  });
  run.check("nested_grid_max_tau", [&](std::string& d) {
    const HardwareContext hw;
    const auto coarse = search::grid_search(hw, 1.0, 100, 200);
    const auto fine = search::grid_search(hw, 1.0, 10000, 200);
    auto max_tau = [](const auto& v) {
      std::size_t m = 0;
      for (const auto& r : v) m = std::max(m, r.tau);
      return m;
    };
    d = "max tau n=100: " + std::to_string(max_tau(coarse)) + ", n=10000: " + std::to_string(max_tau(fine));
    return max_tau(fine) >= max_tau(coarse) && max_tau(fine) >= 10;
  });
  run.check(
      "bisection_stable_trace",
      [&](std::string& d) {
        const auto res = search::bisection_search(ctx, ctx.num(1.0), ctx.num(0.4), ctx.num(0.5), 60, 10000);
        std::size_t below = 0, above = 0;
        for (std::size_t t = 0; t <= res.tau && t < res.trace.size(); ++t) {
          const auto& st = res.trace[t];
          if (!(st.r > 0.1) && st.s < 1.0 - ctx.ratio(4, 3) * st.r - 1e-6) ++below;
          // the last stable point precedes the first decrease, so it may sit above g
          if (t < res.tau && !(st.r > 0.9) && st.s > dynamics::threshold_g(ctx, st.r) + 1e-6) ++above;
        }
        d = "tau " + std::to_string(res.tau) + ", below 1-4r/3: " + std::to_string(below) +
            ", above g: " + std::to_string(above);
        return res.tau >= 50 && below == 0 && above == 0;
      },
      true);
}

void worstcase_suite(Runner& run) {
  const ExtendedContext ctx(PrecisionConfig::extended(256));
  run.check("lemma_xy_floor_grid", [&](std::string& d) {
    const auto rep = lemmas::xy_floor_grid(ctx, 200, 100, 1e-9);
    d = std::to_string(rep.points) + " points, min X+Y " + fmt(rep.min_value);
    return rep.ok();
  });
  run.check("lemma_xy_band_grid", [&](std::string& d) {
    const auto rep = lemmas::xy_band_grid(ctx, 200, 100, 1e-9);
    d = std::to_string(rep.points) + " points, min margin/r^3 " + fmt(rep.min_value);
    return rep.ok();
  });
  run.check("lemma_c_prime_grid", [&](std::string& d) {
    const auto rep = lemmas::c_prime_grid(ctx, 200, 100, 1e-9);
    d = std::to_string(rep.points) + " points, c' in [" + fmt(rep.min_value) + ", " + fmt(rep.max_value) + "]";
    return rep.ok();
  });

  for (std::size_t horizon : {10u, 50u, 200u, 1000u}) {
    run.check("construction_T" + std::to_string(horizon), [&, horizon](std::string& d) {
      const int bits = worstcase::default_construction_bits(horizon);
      BigFloat::set_default_precision(bits);
      const ExtendedContext wc(PrecisionConfig::extended(bits));
      const auto con = worstcase::alg1_construct(wc, worstcase::ConstructionParams<BigFloat>{horizon, {}, {}});
      const auto replay = worstcase::forward_replay(wc, con.start, horizon);
      auto cert = worstcase::certify(wc, con.start, replay, horizon, worstcase::default_certify_options(wc.config()));
      const BigFloat rev = worstcase::reversal_error(wc, con, replay);
      const bool start_ok = !(con.start.r < wc.ratio(1, 18)) && con.start.r < wc.ratio(1, 10);
      const bool rev_ok = !(rev > wc.slack());
      d = "T_hat " + std::to_string(con.t_hat) + ", r0 " + fmt(to_double(con.start.r)) + ", reversal " +
          fmt(to_double(rev)) + ", certificate " + (cert.passes() ? "pass" : "fail");
      return con.t_hat >= horizon && start_ok && rev_ok && cert.passes();
    });
  }

  if (run.opt.perturb) {
    const double rel = *run.opt.perturb;
    run.check("perturbed_replay_fragility_T1000", [&](std::string& d) {
      const std::size_t horizon = 1000;
      const int bits = worstcase::default_construction_bits(horizon);
      BigFloat::set_default_precision(bits);
      const ExtendedContext wc(PrecisionConfig::extended(bits));
      const auto con = worstcase::alg1_construct(wc, worstcase::ConstructionParams<BigFloat>{horizon, {}, {}});
      const auto pert = worstcase::perturbed_replay(wc, con.start, horizon, rel);
      const auto cert =
          worstcase::certify(wc, con.start, pert, horizon, worstcase::default_certify_options(wc.config()));
      d = "gamma scaled by 1+" + fmt(rel) + ": monotone_s " + (cert.monotone_s ? "holds" : "fails") +
          (cert.first_decrease ? " (first decrease at t=" + std::to_string(*cert.first_decrease) + ")" : "");
      return !cert.monotone_s;
    });
  }
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"numeric", "dynamics", "fwcore", "worstcase", "search"};
  return names;
}

std::vector<Check> run_suites(const Options& opt) {
  for (const auto& s : opt.suites) {
    if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end()) {
      throw InvalidArgument("unknown suite '" + s + "'");
    }
  }
  auto wanted = [&](const std::string& s) {
    return opt.suites.empty() || std::find(opt.suites.begin(), opt.suites.end(), s) != opt.suites.end();
  };
  std::vector<Check> out;
  const auto ctx_handle = make_context(opt.precision);
  for (const auto& name : suite_names()) {
    if (!wanted(name)) continue;
    Runner run{opt, out, name};
    if (name == "worstcase") {
      worstcase_suite(run);
      continue;
    }
    ctx_handle.visit([&](const auto& ctx) {
      if (name == "numeric") numeric_suite(ctx, run);
      if (name == "dynamics") dynamics_suite(ctx, run);
      if (name == "fwcore") fwcore_suite(ctx, run);
      if (name == "search") search_suite(ctx, run);
    });
  }
  return out;
}

bool all_pass(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass || c.warning_only; });
}

io::json report_json(const std::vector<Check>& checks) {
  io::json j;
  io::json arr = io::json::array();
  std::size_t failed = 0, warnings = 0;
  for (const auto& c : checks) {
    io::json e;
    e["suite"] = c.suite;
    e["name"] = c.name;
    e["status"] = c.pass ? "pass" : (c.warning_only ? "warn" : "fail");
    e["detail"] = c.detail;
    e["seconds"] = c.seconds;
    arr.push_back(e);
    if (!c.pass) (c.warning_only ? warnings : failed) += 1;
  }
  j["checks"] = arr;
  j["total"] = checks.size();
  j["failed"] = failed;
  j["warnings"] = warnings;
  j["passes"] = failed == 0;
  return j;
}

}  // namespace fwlb::verify

namespace fwlb::experiments {

CommandResult cmd_verify(const ExperimentConfig& cfg) {
  verify::Options opt;
  opt.precision = resolve_precision(cfg, 256);
  opt.seed = cfg.seed;
  opt.perturb = cfg.perturb;
  opt.suites = cfg.suites;
  if (cfg.grid_n) opt.samples = *cfg.grid_n;
  const auto checks = verify::run_suites(opt);
  CommandResult res;
  res.summary = verify::report_json(checks);
  res.summary["command"] = "verify";
  res.summary["precision"] = io::precision_json(opt.precision);
  res.exit_code = verify::all_pass(checks) ? 0 : 1;
  return res;
}

}  // namespace fwlb::experiments
