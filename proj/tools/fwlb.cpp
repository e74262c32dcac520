// fwlb: worst-case Frank-Wolfe trajectories, searches and certificates.

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "fwlb/error.hpp"
#include "fwlb/experiments.hpp"
#include "fwlb/kernels.hpp"

using fwlb::experiments::Command;
using fwlb::experiments::ExperimentConfig;
using fwlb::experiments::Format;

namespace {

void add_common(CLI::App* sub, ExperimentConfig& cfg, std::string& format) {
  sub->add_option("--precision-bits", cfg.precision_bits, "Mantissa bits; 53 selects hardware doubles");
  sub->add_option("--horizon", cfg.horizon, "Iteration horizon T");
  sub->add_option("--r0", cfg.r0, "Initial residual r0");
  sub->add_option("--s0", cfg.s0, "Initial contraction s0");
  sub->add_option("--epsilon", cfg.epsilon, "Terminal residual of the construction");
  sub->add_option("--rmax", cfg.rmax, "Backward-pass threshold r_max");
  sub->add_option("--tol", cfg.tol, "Certificate / band tolerance");
  sub->add_option("--grid-n", cfg.grid_n, "Grid resolution or sample count");
  sub->add_option("--seed", cfg.seed, "RNG seed");
  sub->add_option("--out", cfg.out, "Output directory");
  sub->add_option("--format", format, "Summary format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case Frank-Wolfe trajectories on balls and ellipsoids"};
  app.require_subcommand(1);
  bool force_scalar = false;
  app.add_flag("--force-scalar", force_scalar, "Disable SIMD kernels");

  ExperimentConfig cfg;
  std::string format = "json";
  const std::map<std::string, std::pair<Command, std::string>> commands{
      {"run", {Command::Run, "Rate sweeps for the boundary, interior and exterior regimes"}},
      {"worstcase", {Command::Worstcase, "Backward construction, replay and certificate"}},
      {"heatmap", {Command::Heatmap, "Iterations to gap 1e-4 over a disk grid"}},
      {"gridsearch", {Command::Gridsearch, "Stable-phase length over a uniform s0 grid"}},
      {"bisect", {Command::Bisect, "Parity-guided bisection for long stable phases"}},
      {"phase", {Command::Phase, "Phase-portrait trace and curves"}},
      {"verify", {Command::Verify, "Property suites with pass/fail report"}},
  };
  std::map<CLI::App*, Command> subs;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.second);
    add_common(sub, cfg, format);
    subs[sub] = entry.first;
    switch (entry.first) {
      case Command::Run:
        sub->add_option("--regime", cfg.regime, "Optimizer regime")
            ->check(CLI::IsMember({"boundary", "interior", "exterior", "all"}));
        sub->add_option("--starts", cfg.starts, "Number of seeded random starts");
        sub->add_option("--dimension", cfg.dimension, "Ambient dimension");
        sub->add_option("--x0", cfg.x0, "Explicit start point")->delimiter(',');
        break;
      case Command::Worstcase:
        sub->add_flag("--slow", cfg.slow, "Full-scale horizon T = 10^4");
        sub->add_option("--perturb", cfg.perturb, "Scale replay stepsizes by (1 + value)");
        break;
      case Command::Gridsearch:
        sub->add_option("--cap", cfg.cap, "Cap on the stable-phase length");
        break;
      case Command::Heatmap:
        sub->add_option("--cap", cfg.cap, "Iteration cap per grid point");
        break;
      case Command::Bisect:
      case Command::Phase:
        sub->add_option("--lo", cfg.lo, "Bracket lower end");
        sub->add_option("--hi", cfg.hi, "Bracket upper end");
        sub->add_option("--iters", cfg.iters, "Bisection steps");
        sub->add_option("--cap", cfg.cap, "Cap on the stable-phase length");
        if (entry.first == Command::Phase) {
          sub->add_option("--source", cfg.source, "Trace source")->check(CLI::IsMember({"worstcase", "bisect"}));
          sub->add_flag("--slow", cfg.slow, "Full-scale horizon T = 10^4");
        }
        break;
      case Command::Verify:
        sub->add_option("--suite", cfg.suites, "Restrict to suites")
            ->check(CLI::IsMember({"numeric", "dynamics", "fwcore", "worstcase", "search"}));
        sub->add_option("--perturb", cfg.perturb, "Add the perturbed worst-case replay check");
        break;
    }
  }

  CLI11_PARSE(app, argc, argv);
  if (force_scalar) fwlb::kernels::force_scalar(true);
  for (const auto& [sub, cmd] : subs) {
    if (sub->parsed()) cfg.command = cmd;
  }
  cfg.format = format == "csv" ? Format::Csv : Format::Json;

  try {
    const auto res = fwlb::experiments::run_command(cfg);
    std::cout << res.summary.dump(2) << '\n';
    return res.exit_code;
  } catch (const fwlb::Error& e) {
    std::cerr << "fwlb: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fwlb: " << e.what() << '\n';
    return 2;
  }
}
