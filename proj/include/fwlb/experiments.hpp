#pragma once

// Experiment drivers behind the `fwlb` CLI. Every command writes its data
// files under `out` and returns a summary plus an exit status that is 0 iff
// all checks the command performs pass.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fwlb/io.hpp"
#include "fwlb/numeric.hpp"

namespace fwlb::experiments {

enum class Command { Run, Worstcase, Heatmap, Gridsearch, Bisect, Phase, Verify };
enum class Format { Csv, Json };

struct ExperimentConfig {
  Command command = Command::Run;
  std::optional<int> precision_bits;  // 53 selects Hardware mode
  std::optional<std::size_t> horizon;
  // Scalars stay textual until the context is known, so they parse at full precision.
  std::optional<std::string> r0, s0, epsilon, rmax, lo, hi;
  std::optional<double> tol;
  std::optional<std::size_t> grid_n, cap, iters;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  Format format = Format::Json;

  // run
  std::string regime = "all";  // boundary | interior | exterior | all
  std::size_t starts = 5;
  std::size_t dimension = 2;
  std::vector<double> x0;

  // worstcase / phase / verify
  bool slow = false;
  std::optional<double> perturb;
  std::vector<std::string> suites;
  std::string source = "worstcase";  // phase: worstcase | bisect
};

struct CommandResult {
  int exit_code = 0;
  io::json summary;
};

/// Hardware when bits == 53, Extended(bits) otherwise; `fallback` applies
/// when no width was requested (0 means Hardware).
PrecisionConfig resolve_precision(const ExperimentConfig& cfg, int fallback);

CommandResult cmd_rates(const ExperimentConfig& cfg);
CommandResult cmd_worstcase(const ExperimentConfig& cfg);
CommandResult cmd_heatmap(const ExperimentConfig& cfg);
CommandResult cmd_gridsearch(const ExperimentConfig& cfg);
CommandResult cmd_bisect(const ExperimentConfig& cfg);
CommandResult cmd_phase(const ExperimentConfig& cfg);
CommandResult cmd_verify(const ExperimentConfig& cfg);

/// Dispatches on cfg.command and writes the summary to out/<command>.{json,csv}.
CommandResult run_command(const ExperimentConfig& cfg);

const char* command_name(Command c);

}  // namespace fwlb::experiments
