#include "fwlb/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <memory>
#include <string>

namespace fwlb {

namespace {

thread_local int g_default_bits = 53;

mpfr_prec_t wider(const BigFloat& a, const BigFloat& b) {
  return static_cast<mpfr_prec_t>(std::max(a.precision(), b.precision()));
}

}  // namespace

int PrecisionConfig::decimal_digits() const {
  return static_cast<int>(std::ceil(bits() * 0.302)) + 2;
}

void PrecisionConfig::validate() const {
  if (is_extended() && mantissa_bits < 53) {
    throw InvalidArgument("mantissa_bits must be >= 53, got " + std::to_string(mantissa_bits));
  }
  if (is_extended() && mantissa_bits > (1 << 24)) {
    throw InvalidArgument("mantissa_bits too large: " + std::to_string(mantissa_bits));
  }
}

std::string PrecisionConfig::describe() const {
  return is_extended() ? "extended(" + std::to_string(mantissa_bits) + ")" : "hardware";
}

// ---------------------------------------------------------------------------
// BigFloat

BigFloat::BigFloat() {
  mpfr_init2(v_, g_default_bits);
  mpfr_set_zero(v_, 1);
}

BigFloat::BigFloat(int bits, std::nullptr_t) { mpfr_init2(v_, bits); }

BigFloat::BigFloat(double v, int bits) {
  mpfr_init2(v_, bits);
  mpfr_set_d(v_, v, MPFR_RNDN);
}

BigFloat::BigFloat(const BigFloat& other) {
  mpfr_init2(v_, mpfr_get_prec(other.v_));
  mpfr_set(v_, other.v_, MPFR_RNDN);
}

BigFloat::BigFloat(BigFloat&& other) noexcept {
  mpfr_init2(v_, MPFR_PREC_MIN);
  mpfr_swap(v_, other.v_);
}

BigFloat& BigFloat::operator=(const BigFloat& other) {
  if (this != &other) {
    if (mpfr_get_prec(v_) != mpfr_get_prec(other.v_)) mpfr_set_prec(v_, mpfr_get_prec(other.v_));
    mpfr_set(v_, other.v_, MPFR_RNDN);
  }
  return *this;
}

BigFloat& BigFloat::operator=(BigFloat&& other) noexcept {
  mpfr_swap(v_, other.v_);
  return *this;
}

BigFloat::~BigFloat() { mpfr_clear(v_); }

BigFloat BigFloat::parse(std::string_view text, int bits) {
  BigFloat out(bits, nullptr);
  std::string buf(text);
  if (mpfr_set_str(out.v_, buf.c_str(), 10, MPFR_RNDN) != 0) {
    throw InvalidArgument("not a decimal number: '" + buf + "'");
  }
  return out;
}

BigFloat BigFloat::pow2(long exponent, int bits) {
  BigFloat out(bits, nullptr);
  mpfr_set_ui_2exp(out.v_, 1, exponent, MPFR_RNDN);
  return out;
}

BigFloat BigFloat::ratio(long long num, long long den, int bits) {
  BigFloat n(bits, nullptr);
  BigFloat d(bits, nullptr);
  mpfr_set_si(n.v_, static_cast<long>(num), MPFR_RNDN);
  mpfr_set_si(d.v_, static_cast<long>(den), MPFR_RNDN);
  BigFloat out(bits, nullptr);
  mpfr_div(out.v_, n.v_, d.v_, MPFR_RNDN);
  return out;
}

int BigFloat::default_precision() { return g_default_bits; }

void BigFloat::set_default_precision(int bits) { g_default_bits = bits; }

std::string BigFloat::to_string(int digits) const {
  if (mpfr_nan_p(v_)) return "nan";
  if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
  char* raw = nullptr;
  if (mpfr_asprintf(&raw, "%.*Re", std::max(digits - 1, 0), v_) < 0) throw Error("mpfr_asprintf failed");
  std::unique_ptr<char, decltype(&mpfr_free_str)> guard(raw, &mpfr_free_str);
  return std::string(raw);
}

BigFloat& BigFloat::operator+=(const BigFloat& o) { return *this = *this + o; }
BigFloat& BigFloat::operator-=(const BigFloat& o) { return *this = *this - o; }
BigFloat& BigFloat::operator*=(const BigFloat& o) { return *this = *this * o; }
BigFloat& BigFloat::operator/=(const BigFloat& o) { return *this = *this / o; }

BigFloat operator-(const BigFloat& a) {
  BigFloat out(a.precision(), nullptr);
  mpfr_neg(out.v_, a.v_, MPFR_RNDN);
  return out;
}

#define FWLB_BINARY_OP(op, fn, fn_d, d_fn)                           \
  BigFloat operator op(const BigFloat& a, const BigFloat& b) {       \
    BigFloat out(static_cast<int>(wider(a, b)), nullptr);            \
    fn(out.v_, a.v_, b.v_, MPFR_RNDN);                               \
    return out;                                                      \
  }                                                                  \
  BigFloat operator op(const BigFloat& a, double b) {                \
    BigFloat out(a.precision(), nullptr);                            \
    fn_d(out.v_, a.v_, b, MPFR_RNDN);                                \
    return out;                                                      \
  }                                                                  \
  BigFloat operator op(double a, const BigFloat& b) {                \
    BigFloat out(b.precision(), nullptr);                            \
    d_fn(out.v_, a, b.v_, MPFR_RNDN);                                \
    return out;                                                      \
  }

namespace {
int add_d_rev(mpfr_ptr r, double a, mpfr_srcptr b, mpfr_rnd_t rnd) { return mpfr_add_d(r, b, a, rnd); }
int mul_d_rev(mpfr_ptr r, double a, mpfr_srcptr b, mpfr_rnd_t rnd) { return mpfr_mul_d(r, b, a, rnd); }
}  // namespace

FWLB_BINARY_OP(+, mpfr_add, mpfr_add_d, add_d_rev)
FWLB_BINARY_OP(-, mpfr_sub, mpfr_sub_d, mpfr_d_sub)
FWLB_BINARY_OP(*, mpfr_mul, mpfr_mul_d, mul_d_rev)
FWLB_BINARY_OP(/, mpfr_div, mpfr_div_d, mpfr_d_div)

#undef FWLB_BINARY_OP

std::partial_ordering operator<=>(const BigFloat& a, const BigFloat& b) {
  if (a.is_nan() || b.is_nan()) return std::partial_ordering::unordered;
  const int c = mpfr_cmp(a.v_, b.v_);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

std::partial_ordering operator<=>(const BigFloat& a, double b) {
  if (a.is_nan() || std::isnan(b)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp_d(a.v_, b);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

BigFloat sqrt(const BigFloat& x) {
  BigFloat out = x;
  mpfr_sqrt(out.get(), x.get(), MPFR_RNDN);
  return out;
}

BigFloat abs(const BigFloat& x) {
  BigFloat out = x;
  mpfr_abs(out.get(), x.get(), MPFR_RNDN);
  return out;
}

BigFloat log(const BigFloat& x) {
  BigFloat out = x;
  mpfr_log(out.get(), x.get(), MPFR_RNDN);
  return out;
}

// ---------------------------------------------------------------------------
// Contexts

Context<double>::Context(PrecisionConfig cfg) : cfg_(cfg), slack_(std::ldexp(1.0, -26)) {
  cfg_.validate();
}

double Context<double>::parse(std::string_view text) const {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw InvalidArgument("not a decimal number: '" + std::string(text) + "'");
  }
  return v;
}

std::string Context<double>::format(double v) const {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Context<BigFloat>::Context(PrecisionConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  if (!cfg_.is_extended()) throw InvalidArgument("Context<BigFloat> requires Extended mode");
  slack_ = BigFloat::pow2(-(cfg_.mantissa_bits / 2), cfg_.mantissa_bits);
}

ScalarContext make_context(const PrecisionConfig& cfg) { return ScalarContext(cfg); }

}  // namespace fwlb
