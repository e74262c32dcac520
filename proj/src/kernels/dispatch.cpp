#include <atomic>
#include <cstdlib>

#include "fwlb/kernels.hpp"

namespace fwlb::kernels {

namespace {

std::atomic<bool> g_force_scalar{false};

bool env_forces_scalar() {
  static const bool forced = [] {
    const char* v = std::getenv("FWLB_FORCE_SCALAR");
    return v != nullptr && *v != '\0' && *v != '0';
  }();
  return forced;
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(FWLB_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  if (g_force_scalar.load(std::memory_order_relaxed) || env_forces_scalar()) return Isa::Scalar;
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void forward_step(Isa isa, const double* r, const double* s, double* r_out, double* s_out, std::uint8_t* status,
                  std::size_t n) {
#if defined(FWLB_HAVE_AVX2)
  if (isa == Isa::Avx2 && isa_available(Isa::Avx2)) return avx2::forward_step(r, s, r_out, s_out, status, n);
#endif
  (void)isa;
  scalar::forward_step(r, s, r_out, s_out, status, n);
}

void ls_polar_step(Isa isa, const double* r, const double* theta, double* r_out, double* theta_out,
                   std::uint8_t* status, std::size_t n) {
#if defined(FWLB_HAVE_AVX2)
  if (isa == Isa::Avx2 && isa_available(Isa::Avx2)) return avx2::ls_polar_step(r, theta, r_out, theta_out, status, n);
#endif
  (void)isa;
  scalar::ls_polar_step(r, theta, r_out, theta_out, status, n);
}

}  // namespace fwlb::kernels
