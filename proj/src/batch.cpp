#include "fwlb/batch.hpp"

#include <numeric>

#include "fwlb/dynamics.hpp"

namespace fwlb::batch {

namespace {

// Working set of live lanes, compacted after every step.
struct Lanes {
  std::vector<std::size_t> id;
  std::vector<double> a, b, a_next, b_next;
  std::vector<std::uint8_t> status;

  void resize_scratch() {
    a_next.resize(id.size());
    b_next.resize(id.size());
    status.resize(id.size());
  }
};

}  // namespace

std::vector<PhaseLength> stable_phase_lengths(double r0, const std::vector<double>& s0, std::size_t cap,
                                              kernels::Isa isa) {
  const HardwareContext ctx;
  std::vector<PhaseLength> out(s0.size());
  Lanes lanes;
  for (std::size_t i = 0; i < s0.size(); ++i) {
    if (!dynamics::in_M(ctx, r0, s0[i])) continue;
    lanes.id.push_back(i);
    lanes.a.push_back(r0);
    lanes.b.push_back(s0[i]);
  }
  for (std::size_t k = 0; k < cap && !lanes.id.empty(); ++k) {
    lanes.resize_scratch();
    kernels::forward_step(isa, lanes.a.data(), lanes.b.data(), lanes.a_next.data(), lanes.b_next.data(),
                          lanes.status.data(), lanes.id.size());
    std::size_t keep = 0;
    for (std::size_t j = 0; j < lanes.id.size(); ++j) {
      if (lanes.status[j] != kernels::kOk || lanes.b_next[j] < lanes.b[j]) continue;
      out[lanes.id[j]].tau = k + 1;
      lanes.id[keep] = lanes.id[j];
      lanes.a[keep] = lanes.a_next[j];
      lanes.b[keep] = lanes.b_next[j];
      ++keep;
    }
    lanes.id.resize(keep);
    lanes.a.resize(keep);
    lanes.b.resize(keep);
  }
  for (auto& p : out) p.censored = cap > 0 && p.tau == cap;
  return out;
}

std::vector<int> iterations_to_gap(const std::vector<double>& r0, const std::vector<double>& theta0,
                                   double gap_target, int max_iters, kernels::Isa isa) {
  const HardwareContext ctx;
  std::vector<int> out(r0.size(), -1);
  Lanes lanes;
  for (std::size_t i = 0; i < r0.size(); ++i) {
    if (!(r0[i] > ctx.slack()) || !(r0[i] * r0[i] > gap_target)) {
      out[i] = 0;
      continue;
    }
    lanes.id.push_back(i);
    lanes.a.push_back(r0[i]);
    lanes.b.push_back(theta0[i]);
  }
  for (int t = 0; t < max_iters && !lanes.id.empty(); ++t) {
    lanes.resize_scratch();
    kernels::ls_polar_step(isa, lanes.a.data(), lanes.b.data(), lanes.a_next.data(), lanes.b_next.data(),
                           lanes.status.data(), lanes.id.size());
    std::size_t keep = 0;
    for (std::size_t j = 0; j < lanes.id.size(); ++j) {
      const double r = lanes.a_next[j];
      if (lanes.status[j] != kernels::kOk || !(r * r > gap_target)) {
        out[lanes.id[j]] = t + 1;
        continue;
      }
      lanes.id[keep] = lanes.id[j];
      lanes.a[keep] = r;
      lanes.b[keep] = lanes.b_next[j];
      ++keep;
    }
    lanes.id.resize(keep);
    lanes.a.resize(keep);
    lanes.b.resize(keep);
  }
  return out;
}

JumpSweep jump_sweep(const std::vector<double>& r0, const std::vector<double>& s0, std::size_t horizon,
                     kernels::Isa isa) {
  JumpSweep rep;
  rep.trajectories = r0.size();
  Lanes lanes;
  lanes.id.resize(r0.size());
  std::iota(lanes.id.begin(), lanes.id.end(), std::size_t{0});
  lanes.a = r0;
  lanes.b = s0;
  for (std::size_t t = 0; t < horizon && !lanes.id.empty(); ++t) {
    lanes.resize_scratch();
    kernels::forward_step(isa, lanes.a.data(), lanes.b.data(), lanes.a_next.data(), lanes.b_next.data(),
                          lanes.status.data(), lanes.id.size());
    std::size_t keep = 0;
    for (std::size_t j = 0; j < lanes.id.size(); ++j) {
      if (lanes.status[j] == kernels::kDomainExit) {
        ++rep.early_exits;
        continue;
      }
      ++rep.steps;
      const double s_next = lanes.b_next[j];
      if (s_next < 0.5) {
        ++rep.jumps;
        if (!dynamics::check_jump_precondition(lanes.a[j], lanes.b[j], s_next)) ++rep.violations;
      }
      if (lanes.status[j] == kernels::kTerminated) {
        ++rep.early_exits;
        continue;
      }
      lanes.id[keep] = lanes.id[j];
      lanes.a[keep] = lanes.a_next[j];
      lanes.b[keep] = s_next;
      ++keep;
    }
    lanes.id.resize(keep);
    lanes.a.resize(keep);
    lanes.b.resize(keep);
  }
  return rep;
}

}  // namespace fwlb::batch
