#include "fwlb/experiments.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <type_traits>

#include "fwlb/batch.hpp"
#include "fwlb/dynamics.hpp"
#include "fwlb/fwcore.hpp"
#include "fwlb/search.hpp"
#include "fwlb/worstcase.hpp"

namespace fwlb::experiments {

namespace {

using io::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class S>
S param(const Context<S>& ctx, const std::optional<std::string>& text, const char* fallback) {
  return ctx.parse(text ? std::string_view(*text) : std::string_view(fallback));
}

template <class S>
std::string to_text(const Context<S>& ctx, const S& v) {
  return ctx.format(v);
}

template <class Fn>
void write_with(const std::filesystem::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  io::write_file(path, os.str());
}

/// Uniform sample from the unit ball in R^d.
std::vector<double> random_in_ball(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> x(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& v : x) {
      v = normal(rng);
      n2 += v * v;
    }
  } while (n2 == 0.0);
  const double scale = std::pow(unif(rng), 1.0 / static_cast<double>(d)) / std::sqrt(n2);
  for (auto& v : x) v *= scale;
  return x;
}

struct Regime {
  const char* name;
  double kappa;
};

constexpr Regime kRegimes[] = {{"boundary", 1.0}, {"interior", 0.5}, {"exterior", 2.0}};

template <class S>
CommandResult rates_impl(const Context<S>& ctx, const ExperimentConfig& cfg) {
  const std::size_t d = cfg.dimension;
  if (d < 2) throw InvalidArgument("--dimension must be >= 2");
  const std::size_t horizon = cfg.horizon.value_or(10000);
  std::vector<std::vector<double>> starts;
  if (!cfg.x0.empty()) {
    if (cfg.x0.size() != d) throw InvalidArgument("--x0 has the wrong dimension");
    starts.push_back(cfg.x0);
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t k = 0; k < cfg.starts; ++k) starts.push_back(random_in_ball(rng, d));
  }

  Vec<S> p(d, ctx.num(0.0));
  p.back() = ctx.num(1.0);
  CommandResult res;
  res.summary["command"] = "run";
  res.summary["horizon"] = horizon;
  res.summary["precision"] = io::precision_json(ctx.config());
  json runs = json::array();
  bool all_ok = true;

  for (const auto& regime : kRegimes) {
    if (cfg.regime != "all" && cfg.regime != regime.name) continue;
    const auto inst = fwcore::make_ball(ctx, p, ctx.num(1.0), ctx.num(2.0), ctx.num(regime.kappa));
    for (std::size_t k = 0; k < starts.size(); ++k) {
      Vec<S> x0;
      for (double v : starts[k]) x0.push_back(ctx.num(v));
      const auto traj = fwcore::run_fw(ctx, inst, x0, fwcore::StepRule<S>::exact(), horizon);
      const std::string stem = std::string(regime.name) + "_" + std::to_string(k);
      write_with(cfg.out / "rates" / (stem + ".csv"), [&](std::ostream& os) { io::write_gap(os, ctx, traj); });
      write_with(cfg.out / "rates" / (stem + "_traj.csv"),
                 [&](std::ostream& os) { io::write_trajectory(os, ctx, traj); });

      json run;
      run["regime"] = regime.name;
      run["start"] = k;
      run["iterations"] = traj.records.back().t;
      run["final_gap"] = to_text(ctx, traj.records.back().gap);
      bool ok = true;
      if (regime.kappa == 1.0) {
        // r_t <= 1/(t + 1/r_0), with 2^-40 relative slack for roundoff
        const S r0 = traj.records.front().r;
        if (r0 > ctx.slack()) {
          for (const auto& rec : traj.records) {
            const S bound = 1.0 / (static_cast<double>(rec.t) + 1.0 / r0);
            if (rec.r > bound * (1.0 + std::ldexp(1.0, -40))) ok = false;
          }
        }
        run["check"] = "r_t <= 1/(t + 1/r0)";
      } else if (regime.kappa < 1.0) {
        // geometric decay: gap_{t+20} / gap_t <= 0.9 for t >= 10
        const auto& rec = traj.records;
        for (std::size_t t = 10; t + 20 < rec.size(); ++t) {
          if (rec[t].gap > 0.0 && rec[t + 20].gap > rec[t].gap * 0.9) ok = false;
        }
        run["check"] = "gap_{t+20}/gap_t <= 0.9 for t >= 10";
      }
      run["ok"] = ok;
      all_ok = all_ok && ok;
      runs.push_back(run);
    }
  }
  res.summary["runs"] = runs;
  res.summary["ok"] = all_ok;
  res.exit_code = all_ok ? 0 : 1;
  return res;
}

template <class S>
CommandResult worstcase_impl(const Context<S>& ctx, const ExperimentConfig& cfg, std::size_t horizon) {
  const auto t0 = Clock::now();
  CommandResult res;
  json& j = res.summary;
  j["command"] = "worstcase";
  j["params"]["T"] = horizon;
  j["precision"] = io::precision_json(ctx.config());

  worstcase::ConstructionParams<S> params;
  params.horizon = horizon;
  if (cfg.epsilon) params.epsilon = ctx.parse(*cfg.epsilon);
  if (cfg.rmax) params.r_max = ctx.parse(*cfg.rmax);

  worstcase::Construction<S> con;
  try {
    con = worstcase::alg1_construct(ctx, params);
  } catch (const ConstructionError& e) {
    j["error"] = e.what();
    j["failed_step"] = e.step();
    j["passes"] = false;
    res.exit_code = 1;
    return res;
  }
  j["params"]["epsilon"] = ctx.format(con.epsilon);
  j["params"]["r_max"] = ctx.format(con.r_max);

  auto opt = worstcase::default_certify_options(ctx.config());
  if (cfg.tol) opt.tol_c = *cfg.tol;
  opt.check_r0_floor = !(con.r_max < ctx.ratio(1, 10));

  const auto replay = worstcase::forward_replay(ctx, con.start, horizon);
  auto cert = worstcase::certify(ctx, con.start, replay, horizon, opt);
  cert.t_hat = con.t_hat;
  cert.roundtrip_max_err = worstcase::reversal_error(ctx, con, replay);
  j["certificate"] = io::certificate_json(ctx, cert);
  j["T_hat_covers_T"] = con.t_hat >= horizon;
  bool passes = cert.passes();

  if (cfg.perturb) {
    const auto pert = worstcase::perturbed_replay(ctx, con.start, horizon, *cfg.perturb);
    auto pcert = worstcase::certify(ctx, con.start, pert, horizon, opt);
    pcert.t_hat = con.t_hat;
    j["perturbation"] = *cfg.perturb;
    j["perturbed_certificate"] = io::certificate_json(ctx, pcert);
    passes = passes && pcert.passes();
    write_with(cfg.out / "perturbed_replay.csv", [&](std::ostream& os) { io::write_rs_trace(os, ctx, pert); });
  }

  // Ambient FW from the embedded start; r_t must track the replay.
  const auto amb = worstcase::embedded_run(ctx, con.start, horizon);
  S dev = ctx.num(0.0);
  for (std::size_t t = 0; t < amb.records.size() && t < replay.size(); ++t) {
    const S rel = abs(amb.records[t].r - replay[t].r) / replay[t].r;
    if (rel > dev) dev = rel;
  }
  j["ambient_max_rel_dev"] = ctx.format(dev);
  j["ambient_steps"] = amb.records.size() == 0 ? 0 : amb.records.back().t;

  write_with(cfg.out / "backward.csv", [&](std::ostream& os) { io::write_rs_trace(os, ctx, con.backward); });
  write_with(cfg.out / "replay.csv", [&](std::ostream& os) { io::write_rs_trace(os, ctx, replay); });
  write_with(cfg.out / "ambient.csv", [&](std::ostream& os) { io::write_trajectory(os, ctx, amb); });
  write_with(cfg.out / "gap.csv", [&](std::ostream& os) { io::write_gap(os, ctx, amb); });
  write_with(cfg.out / "semicircle.csv", [&](std::ostream& os) { io::write_points_2d(os, ctx, amb); });

  j["passes"] = passes;
  j["wall_time_s"] = seconds_since(t0);
  io::write_file(cfg.out / "certificate.json", j.dump(2) + "\n");
  res.exit_code = passes ? 0 : 1;
  return res;
}

template <class S>
CommandResult heatmap_impl(const Context<S>& ctx, const ExperimentConfig& cfg) {
  const std::size_t n = cfg.grid_n.value_or(201);
  if (n < 2) throw InvalidArgument("--grid-n must be >= 2");
  const double target = 1e-4;
  const int max_iters = static_cast<int>(cfg.cap.value_or(1000));

  std::vector<double> xs, ys, rs, thetas;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
      const double y = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n - 1);
      if (x * x + y * y > 1.0) continue;
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  std::vector<int> iters(xs.size(), 0);
  if constexpr (std::is_same_v<S, double>) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double dy = ys[i] - 1.0;
      const double r = std::sqrt(xs[i] * xs[i] + dy * dy);
      rs.push_back(r);
      thetas.push_back(r > 0.0 ? dy / r : -1.0);
    }
    iters = batch::iterations_to_gap(rs, thetas, target, max_iters);
  } else {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const S dy = ctx.num(ys[i]) - 1.0;
      const S dx = ctx.num(xs[i]);
      fwcore::PolarState<S> st{sqrt(dx * dx + dy * dy), ctx.num(-1.0)};
      if (!(st.r > ctx.slack()) || !(st.r * st.r > target)) continue;
      st.theta = dy / st.r;
      int t = 0;
      iters[i] = -1;
      while (t < max_iters) {
        const auto next = dynamics::ls_polar_step(ctx, st);
        ++t;
        if (!next || !(next->r * next->r > target)) {
          iters[i] = t;
          break;
        }
        st = *next;
      }
    }
  }

  int worst = 0;
  bool all_reached = true;
  write_with(cfg.out / "heatmap.csv", [&](std::ostream& os) {
    io::CsvWriter w(os);
    w.row({"x", "y", "iters"});
    for (std::size_t i = 0; i < xs.size(); ++i) {
      w.row({io::format_double(xs[i]), io::format_double(ys[i]), std::to_string(iters[i])});
      if (iters[i] < 0) all_reached = false;
      if (iters[i] > worst) worst = iters[i];
    }
  });
  CommandResult res;
  res.summary["command"] = "heatmap";
  res.summary["grid_n"] = n;
  res.summary["points"] = xs.size();
  res.summary["gap_target"] = target;
  res.summary["max_iters"] = worst;
  const bool ok = all_reached && worst <= 100;
  res.summary["ok"] = ok;
  res.exit_code = ok ? 0 : 1;
  return res;
}

template <class S>
CommandResult gridsearch_impl(const Context<S>& ctx, const ExperimentConfig& cfg) {
  const S r0 = param(ctx, cfg.r0, "1");
  const std::size_t n = cfg.grid_n.value_or(10000);
  const std::size_t cap = cfg.cap.value_or(10000);
  const auto results = search::grid_search(ctx, r0, n, cap);
  std::size_t best = 0;
  write_with(cfg.out / "gridsearch.csv", [&](std::ostream& os) {
    io::CsvWriter w(os);
    w.row({"s0", "tau"});
    for (std::size_t i = 0; i < results.size(); ++i) {
      w.row({ctx.format(results[i].s0), std::to_string(results[i].tau)});
      if (results[i].tau > results[best].tau) best = i;
    }
  });
  CommandResult res;
  res.summary["command"] = "gridsearch";
  res.summary["r0"] = ctx.format(r0);
  res.summary["n"] = n;
  res.summary["cap"] = cap;
  res.summary["max_tau"] = results[best].tau;
  res.summary["argmax_s0"] = ctx.format(results[best].s0);
  res.summary["precision"] = io::precision_json(ctx.config());
  return res;
}

/// Empirical checks on a stable trace t = 0..tau; failures are warnings.
template <class S>
json stable_trace_checks(const Context<S>& ctx, const std::vector<dynamics::RSState<S>>& trace, std::size_t tau,
                         double tol) {
  std::size_t below_affine = 0, above_g = 0, jumps_in_phase = 0;
  const S tenth = ctx.ratio(1, 10);
  const S g_limit = dynamics::threshold_r1(ctx.num(0.49));
  for (std::size_t t = 0; t <= tau && t < trace.size(); ++t) {
    const auto& st = trace[t];
    if (!(st.r > tenth) && st.s < 1.0 - ctx.ratio(4, 3) * st.r - tol) ++below_affine;
    if (st.r > 0.0 && !(st.r > g_limit) && st.s > dynamics::threshold_g(ctx, st.r) + tol) ++above_g;
    if (t < tau && t + 1 < trace.size() && !dynamics::check_jump_precondition(st.r, st.s, trace[t + 1].s)) {
      ++jumps_in_phase;
    }
  }
  json j;
  j["below_affine_lower_bound"] = below_affine;
  j["above_threshold_g"] = above_g;
  j["jump_precondition_violations"] = jumps_in_phase;
  j["warnings"] = below_affine + above_g + jumps_in_phase;
  return j;
}

template <class S>
CommandResult bisect_impl(const Context<S>& ctx, const ExperimentConfig& cfg) {
  const S r0 = param(ctx, cfg.r0, "1");
  const S lo = param(ctx, cfg.lo, "0.4");
  const S hi = param(ctx, cfg.hi, "0.5");
  const std::size_t iters = cfg.iters.value_or(60);
  const std::size_t cap = cfg.cap.value_or(10000);
  const auto found = search::bisection_search(ctx, r0, lo, hi, iters, cap);
  write_with(cfg.out / "bisect_trace.csv", [&](std::ostream& os) { io::write_rs_trace(os, ctx, found.trace); });
  CommandResult res;
  json& j = res.summary;
  j["command"] = "bisect";
  j["precision"] = io::precision_json(ctx.config());
  j["r0"] = ctx.format(r0);
  j["bracket"] = {ctx.format(lo), ctx.format(hi)};
  j["iters"] = iters;
  j["s0"] = ctx.format(found.s0);
  j["tau"] = found.tau;
  j["censored"] = found.censored;
  j["precision_limited"] = found.precision_limited;
  j["heuristic"] = true;
  j["empirical"] = stable_trace_checks(ctx, found.trace, found.tau, cfg.tol.value_or(1e-6));
  return res;
}

template <class S>
CommandResult phase_impl(const Context<S>& ctx, const ExperimentConfig& cfg, std::size_t horizon) {
  const double tol = cfg.tol.value_or(1e-6);
  std::vector<dynamics::RSState<S>> trace;
  std::size_t stable_len = 0;
  if (cfg.source == "bisect") {
    const auto found = search::bisection_search(ctx, param(ctx, cfg.r0, "1"), param(ctx, cfg.lo, "0.4"),
                                                param(ctx, cfg.hi, "0.5"), cfg.iters.value_or(60),
                                                cfg.cap.value_or(10000));
    trace = found.trace;
    stable_len = found.tau + 1;
  } else if (cfg.source == "worstcase") {
    worstcase::ConstructionParams<S> params;
    params.horizon = horizon;
    if (cfg.epsilon) params.epsilon = ctx.parse(*cfg.epsilon);
    if (cfg.rmax) params.r_max = ctx.parse(*cfg.rmax);
    const auto con = worstcase::alg1_construct(ctx, params);
    trace = worstcase::forward_replay(ctx, con.start, horizon);
    stable_len = trace.size();
  } else {
    throw InvalidArgument("--source must be worstcase or bisect");
  }

  // Stable points with r <= 1/10 must sit between 1 - (4/3) r and g(r); the
  // last one may exceed g since its successor is not checked. Doubles resolve
  // the band far below tol.
  std::size_t outside = 0;
  const HardwareContext hw;
  for (std::size_t t = 0; t < stable_len && t < trace.size(); ++t) {
    const double r = to_double(trace[t].r);
    const double s = to_double(trace[t].s);
    if (r > 0.1) continue;
    const bool above = t + 1 < stable_len && s > dynamics::threshold_g(hw, r) + tol;
    if (s < 1.0 - 4.0 / 3.0 * r - tol || above) ++outside;
  }

  const std::size_t n = cfg.grid_n.value_or(200);
  const double r_hi = 0.9;
  std::vector<dynamics::RSState<S>> c_sbar, c_g, c_affine;
  for (std::size_t i = 1; i <= n; ++i) {
    const S r = ctx.num(r_hi) * ctx.ratio(static_cast<long long>(i), static_cast<long long>(n));
    c_sbar.push_back({r, dynamics::sbar(ctx, r)});
    c_g.push_back({r, dynamics::threshold_g(ctx, r)});
    c_affine.push_back({r, 1.0 - ctx.ratio(4, 3) * r});
  }
  write_with(cfg.out / "phase_trace.csv", [&](std::ostream& os) { io::write_rs_points(os, ctx, trace); });
  write_with(cfg.out / "curve_sbar.csv", [&](std::ostream& os) { io::write_rs_points(os, ctx, c_sbar); });
  write_with(cfg.out / "curve_g.csv", [&](std::ostream& os) { io::write_rs_points(os, ctx, c_g); });
  write_with(cfg.out / "curve_affine.csv", [&](std::ostream& os) { io::write_rs_points(os, ctx, c_affine); });

  CommandResult res;
  res.summary["command"] = "phase";
  res.summary["source"] = cfg.source;
  res.summary["points"] = trace.size();
  res.summary["curve_samples"] = n;
  res.summary["outside_band"] = outside;
  // Only the worst-case trace is claimed to stay inside the band.
  const bool ok = cfg.source != "worstcase" || outside == 0;
  res.summary["ok"] = ok;
  res.exit_code = ok ? 0 : 1;
  return res;
}

template <class Fn>
CommandResult with_context(const PrecisionConfig& pc, Fn&& fn) {
  return make_context(pc).visit([&](const auto& ctx) -> CommandResult { return fn(ctx); });
}

}  // namespace

PrecisionConfig resolve_precision(const ExperimentConfig& cfg, int fallback) {
  const int bits = cfg.precision_bits.value_or(fallback);
  if (bits == 0 || bits == 53) return PrecisionConfig::hardware();
  PrecisionConfig pc = PrecisionConfig::extended(bits);
  pc.validate();
  return pc;
}

CommandResult cmd_rates(const ExperimentConfig& cfg) {
  return with_context(resolve_precision(cfg, 0), [&](const auto& ctx) { return rates_impl(ctx, cfg); });
}

static std::size_t worstcase_horizon(const ExperimentConfig& cfg) { return cfg.horizon.value_or(cfg.slow ? 10000 : 1000); }

CommandResult cmd_worstcase(const ExperimentConfig& cfg) {
  const std::size_t horizon = worstcase_horizon(cfg);
  const auto pc = resolve_precision(cfg, worstcase::default_construction_bits(horizon));
  return with_context(pc, [&](const auto& ctx) { return worstcase_impl(ctx, cfg, horizon); });
}

CommandResult cmd_heatmap(const ExperimentConfig& cfg) {
  return with_context(resolve_precision(cfg, 0), [&](const auto& ctx) { return heatmap_impl(ctx, cfg); });
}

CommandResult cmd_gridsearch(const ExperimentConfig& cfg) {
  return with_context(resolve_precision(cfg, 0), [&](const auto& ctx) { return gridsearch_impl(ctx, cfg); });
}

CommandResult cmd_bisect(const ExperimentConfig& cfg) {
  return with_context(resolve_precision(cfg, 256), [&](const auto& ctx) { return bisect_impl(ctx, cfg); });
}

CommandResult cmd_phase(const ExperimentConfig& cfg) {
  const std::size_t horizon = worstcase_horizon(cfg);
  const int fallback = cfg.source == "worstcase" ? worstcase::default_construction_bits(horizon) : 256;
  return with_context(resolve_precision(cfg, fallback), [&](const auto& ctx) { return phase_impl(ctx, cfg, horizon); });
}

const char* command_name(Command c) {
  switch (c) {
    case Command::Run: return "run";
    case Command::Worstcase: return "worstcase";
    case Command::Heatmap: return "heatmap";
    case Command::Gridsearch: return "gridsearch";
    case Command::Bisect: return "bisect";
    case Command::Phase: return "phase";
    case Command::Verify: return "verify";
  }
  return "unknown";
}

namespace {

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else {
    out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

}  // namespace

CommandResult run_command(const ExperimentConfig& cfg) {
  CommandResult res;
  switch (cfg.command) {
    case Command::Run: res = cmd_rates(cfg); break;
    case Command::Worstcase: res = cmd_worstcase(cfg); break;
    case Command::Heatmap: res = cmd_heatmap(cfg); break;
    case Command::Gridsearch: res = cmd_gridsearch(cfg); break;
    case Command::Bisect: res = cmd_bisect(cfg); break;
    case Command::Phase: res = cmd_phase(cfg); break;
    case Command::Verify: res = cmd_verify(cfg); break;
  }
  res.summary["exit_code"] = res.exit_code;
  const std::string stem = std::string(command_name(cfg.command)) + "_summary";
  if (cfg.format == Format::Json) {
    io::write_file(cfg.out / (stem + ".json"), res.summary.dump(2) + "\n");
  } else {
    std::vector<std::pair<std::string, std::string>> kv;
    flatten(res.summary, "", kv);
    std::ostringstream os;
    io::CsvWriter w(os);
    w.row({"key", "value"});
    for (const auto& [k, v] : kv) w.row({k, v});
    io::write_file(cfg.out / (stem + ".csv"), os.str());
  }
  return res;
}

}  // namespace fwlb::experiments
