// Scalar reference: the generic Hardware-mode routines, lane by lane.

#include "fwlb/dynamics.hpp"
#include "fwlb/kernels.hpp"

namespace fwlb::kernels::scalar {

namespace {
const HardwareContext& ctx() {
  static const HardwareContext c;
  return c;
}
}  // namespace

void forward_step(const double* r, const double* s, double* r_out, double* s_out, std::uint8_t* status,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const auto out = dynamics::try_forward_F(ctx(), dynamics::RSState<double>{r[i], s[i]});
    r_out[i] = out.state.r;
    s_out[i] = out.state.s;
    status[i] = out.status == dynamics::StepStatus::Ok ? kOk
                : out.status == dynamics::StepStatus::Terminated ? kTerminated
                                                                 : kDomainExit;
  }
}

void ls_polar_step(const double* r, const double* theta, double* r_out, double* theta_out, std::uint8_t* status,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const auto next = dynamics::ls_polar_step(ctx(), fwcore::PolarState<double>{r[i], theta[i]});
    if (next) {
      r_out[i] = next->r;
      theta_out[i] = next->theta;
      status[i] = kOk;
    } else {
      r_out[i] = 0.0;
      theta_out[i] = 0.0;
      status[i] = kTerminated;
    }
  }
}

}  // namespace fwlb::kernels::scalar
