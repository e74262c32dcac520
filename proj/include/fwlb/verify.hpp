#pragma once

// Property suites behind `fwlb verify`: module invariants checked on random
// samples and fixed grids, reported as machine-readable pass/fail records.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fwlb/io.hpp"
#include "fwlb/numeric.hpp"

namespace fwlb::verify {

struct Check {
  std::string suite;
  std::string name;
  bool pass = false;
  bool warning_only = false;  // heuristic claim; a failure is reported but not fatal
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  PrecisionConfig precision = PrecisionConfig::extended(256);
  std::uint64_t seed = 1;
  std::size_t samples = 100000;      // random states per sampling property
  std::optional<double> perturb;     // scale worst-case stepsizes by (1 + perturb)
  std::vector<std::string> suites;   // empty runs all
};

const std::vector<std::string>& suite_names();

std::vector<Check> run_suites(const Options& opt);

/// True iff every non-warning check passed.
bool all_pass(const std::vector<Check>& checks);

io::json report_json(const std::vector<Check>& checks);

}  // namespace fwlb::verify
