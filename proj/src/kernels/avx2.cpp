// AVX2 lanes of the batch kernels. Built with -mavx2 and without FMA; each
// expression follows the operation order of dynamics.hpp exactly.

#include <immintrin.h>

#include <cmath>

#include "fwlb/kernels.hpp"

namespace fwlb::kernels::avx2 {

namespace {

const double kSlack = std::ldexp(1.0, -26);

inline __m256d v(double x) { return _mm256_set1_pd(x); }

inline void store_status(std::uint8_t* status, __m256d terminated, __m256d exited) {
  const int t = _mm256_movemask_pd(terminated);
  const int e = _mm256_movemask_pd(exited);
  for (int k = 0; k < 4; ++k) {
    status[k] = (e >> k) & 1 ? kDomainExit : ((t >> k) & 1 ? kTerminated : kOk);
  }
}

}  // namespace

void forward_step(const double* r, const double* s, double* r_out, double* s_out, std::uint8_t* status,
                  std::size_t n) {
  const __m256d one = v(1.0);
  const __m256d two = v(2.0);
  const __m256d eps = v(kSlack);
  const __m256d neg_eps = v(-kSlack);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rv = _mm256_loadu_pd(r + i);
    const __m256d sv = _mm256_loadu_pd(s + i);

    // in_M
    const __m256d rc = _mm256_blendv_pd(rv, two, _mm256_cmp_pd(rv, two, _CMP_GT_OQ));
    const __m256d low = _mm256_div_pd(one, _mm256_add_pd(one, rc));
    const __m256d high = _mm256_sqrt_pd(_mm256_div_pd(_mm256_sub_pd(two, rc), v(4.0)));
    const __m256d sb = _mm256_blendv_pd(high, low, _mm256_cmp_pd(rc, one, _CMP_LE_OQ));
    __m256d bad = _mm256_cmp_pd(rv, zero, _CMP_NGT_UQ);
    bad = _mm256_or_pd(bad, _mm256_cmp_pd(rv, _mm256_add_pd(two, eps), _CMP_GT_OQ));
    bad = _mm256_or_pd(bad, _mm256_cmp_pd(sv, neg_eps, _CMP_LT_OQ));
    bad = _mm256_or_pd(bad, _mm256_cmp_pd(sv, _mm256_add_pd(sb, eps), _CMP_GT_OQ));

    // forward_core
    const __m256d q = _mm256_mul_pd(_mm256_add_pd(one, rv), sv);
    __m256d num = _mm256_mul_pd(_mm256_sub_pd(one, q), _mm256_add_pd(one, q));
    const __m256d t1 = _mm256_sub_pd(two, _mm256_mul_pd(two, sv));
    const __m256d t2 = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_add_pd(two, rv), rv), sv), sv);
    const __m256d den = _mm256_sub_pd(t1, t2);

    // clamp_radicand
    bad = _mm256_or_pd(bad, _mm256_cmp_pd(num, neg_eps, _CMP_LT_OQ));
    num = _mm256_blendv_pd(num, zero, _mm256_cmp_pd(num, zero, _CMP_LT_OQ));

    const __m256d rn = _mm256_mul_pd(rv, sv);
    const __m256d sn = _mm256_sqrt_pd(_mm256_div_pd(num, den));
    const __m256d term = _mm256_cmp_pd(rn, zero, _CMP_NGT_UQ);

    _mm256_storeu_pd(r_out + i, _mm256_blendv_pd(rn, rv, bad));
    _mm256_storeu_pd(s_out + i, _mm256_blendv_pd(sn, sv, bad));
    store_status(status + i, term, bad);
  }
  if (i < n) scalar::forward_step(r + i, s + i, r_out + i, s_out + i, status + i, n - i);
}

void ls_polar_step(const double* r, const double* theta, double* r_out, double* theta_out, std::uint8_t* status,
                   std::size_t n) {
  const __m256d one = v(1.0);
  const __m256d two = v(2.0);
  const __m256d eps = v(kSlack);
  const __m256d thr2 = _mm256_mul_pd(eps, eps);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign = v(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rv = _mm256_loadu_pd(r + i);
    const __m256d th = _mm256_loadu_pd(theta + i);

    const __m256d collinear = _mm256_cmp_pd(_mm256_andnot_pd(sign, _mm256_add_pd(th, one)), eps, _CMP_NGT_UQ);

    // ls_core
    const __m256d rp1 = _mm256_add_pd(rv, one);
    const __m256d den =
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(rp1, rp1), _mm256_mul_pd(_mm256_mul_pd(two, rp1), th)), one);
    const __m256d r2 =
        _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(rv, rv), _mm256_sub_pd(one, _mm256_mul_pd(th, th))), den);

    const __m256d term = _mm256_or_pd(collinear, _mm256_cmp_pd(r2, thr2, _CMP_NGT_UQ));
    const __m256d rn = _mm256_sqrt_pd(r2);
    const __m256d tn = _mm256_mul_pd(_mm256_xor_pd(sign, _mm256_div_pd(rp1, rv)), rn);

    _mm256_storeu_pd(r_out + i, _mm256_blendv_pd(rn, zero, term));
    _mm256_storeu_pd(theta_out + i, _mm256_blendv_pd(tn, zero, term));
    store_status(status + i, term, zero);
  }
  if (i < n) scalar::ls_polar_step(r + i, theta + i, r_out + i, theta_out + i, status + i, n - i);
}

}  // namespace fwlb::kernels::avx2
