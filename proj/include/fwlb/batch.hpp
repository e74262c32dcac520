#pragma once

// Hardware-mode sweep drivers on top of the batch kernels. Results match the
// generic per-sample routines exactly; see tests/test_kernels.cpp.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fwlb/kernels.hpp"

namespace fwlb::batch {

struct PhaseLength {
  std::size_t tau = 0;
  bool censored = false;
};

/// Stable-phase length from (r0, s0[i]) for every i; same rule as
/// search::stable_phase_length. Starts outside M get tau = 0.
std::vector<PhaseLength> stable_phase_lengths(double r0, const std::vector<double>& s0, std::size_t cap,
                                              kernels::Isa isa = kernels::active_isa());

/// First t with r_t^2 <= gap_target under exact line search from the polar
/// states (r0[i], theta0[i]); -1 if not reached within max_iters.
std::vector<int> iterations_to_gap(const std::vector<double>& r0, const std::vector<double>& theta0,
                                   double gap_target, int max_iters, kernels::Isa isa = kernels::active_isa());

struct JumpSweep {
  std::size_t trajectories = 0;
  std::size_t steps = 0;       // forward steps actually taken
  std::size_t jumps = 0;       // occurrences of s_{t+1} < 1/2
  std::size_t violations = 0;  // jumps without s_t > 1/(1+r_t)^2
  std::size_t early_exits = 0; // lanes stopped by termination or domain exit
};

/// Iterates forward_F `horizon` times from each start and checks every jump.
JumpSweep jump_sweep(const std::vector<double>& r0, const std::vector<double>& s0, std::size_t horizon,
                     kernels::Isa isa = kernels::active_isa());

}  // namespace fwlb::batch
