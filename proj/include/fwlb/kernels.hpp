#pragma once

// Batch double-precision kernels for the sweep-heavy drivers (grid search,
// heatmap, jump sweeps). Each lane performs exactly the operations of the
// generic Hardware-mode routines in dynamics.hpp, in the same order, so every
// ISA variant is bit-identical to the scalar reference.

#include <cstddef>
#include <cstdint>

namespace fwlb::kernels {

enum class Isa { Scalar, Avx2 };

/// Lane status, mirroring dynamics::StepStatus.
enum : std::uint8_t { kOk = 0, kTerminated = 1, kDomainExit = 2 };

/// Best ISA supported by this CPU and build, unless forced to scalar by
/// force_scalar(true) or the FWLB_FORCE_SCALAR environment variable.
Isa active_isa();
void force_scalar(bool on);
const char* isa_name(Isa isa);
bool isa_available(Isa isa);

/// One forward_F step per lane. On kDomainExit the outputs are unspecified.
void forward_step(Isa isa, const double* r, const double* s, double* r_out, double* s_out, std::uint8_t* status,
                  std::size_t n);

/// One exact line search polar step per lane. kTerminated covers collinear
/// lanes and r' below the termination threshold.
void ls_polar_step(Isa isa, const double* r, const double* theta, double* r_out, double* theta_out,
                   std::uint8_t* status, std::size_t n);

inline void forward_step(const double* r, const double* s, double* r_out, double* s_out, std::uint8_t* status,
                         std::size_t n) {
  forward_step(active_isa(), r, s, r_out, s_out, status, n);
}

inline void ls_polar_step(const double* r, const double* theta, double* r_out, double* theta_out,
                          std::uint8_t* status, std::size_t n) {
  ls_polar_step(active_isa(), r, theta, r_out, theta_out, status, n);
}

namespace scalar {
void forward_step(const double* r, const double* s, double* r_out, double* s_out, std::uint8_t* status, std::size_t n);
void ls_polar_step(const double* r, const double* theta, double* r_out, double* theta_out, std::uint8_t* status,
                   std::size_t n);
}  // namespace scalar

#if defined(FWLB_HAVE_AVX2)
namespace avx2 {
void forward_step(const double* r, const double* s, double* r_out, double* s_out, std::uint8_t* status, std::size_t n);
void ls_polar_step(const double* r, const double* theta, double* r_out, double* theta_out, std::uint8_t* status,
                   std::size_t n);
}  // namespace avx2
#endif

}  // namespace fwlb::kernels
