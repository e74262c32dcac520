#pragma once

// Scalar backends shared by every dynamics module.
//
// Two backends satisfy the same field contract: hardware `double` and
// `BigFloat`, a radix-2 MPFR number with a per-value mantissa width. Generic
// code is written against `Context<S>`, which hands out constants at the
// right width and owns the boundary slack 2^-(bits/2).

#include <mpfr.h>

#include <compare>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>

#include "fwlb/error.hpp"

namespace fwlb {

enum class PrecisionMode { Hardware, Extended };

struct PrecisionConfig {
  PrecisionMode mode = PrecisionMode::Hardware;
  int mantissa_bits = 53;  // ignored in Hardware mode

  static PrecisionConfig hardware() { return {}; }
  static PrecisionConfig extended(int bits) { return {PrecisionMode::Extended, bits}; }

  bool is_extended() const { return mode == PrecisionMode::Extended; }
  int bits() const { return is_extended() ? mantissa_bits : 53; }

  /// Decimal digits that make a write/parse cycle the identity.
  int decimal_digits() const;

  /// Throws InvalidArgument for mantissa_bits < 53 in Extended mode.
  void validate() const;

  std::string describe() const;
};

/// Arbitrary-precision binary float with round-to-nearest semantics.
///
/// Each value carries its own precision. Results of binary operations take
/// the larger precision of the two operands; a `double` operand adopts the
/// precision of the BigFloat it meets.
class BigFloat {
 public:
  BigFloat();
  BigFloat(double v, int bits);
  BigFloat(const BigFloat& other);
  BigFloat(BigFloat&& other) noexcept;
  BigFloat& operator=(const BigFloat& other);
  BigFloat& operator=(BigFloat&& other) noexcept;
  ~BigFloat();

  static BigFloat parse(std::string_view text, int bits);
  /// 2^exponent at the given precision.
  static BigFloat pow2(long exponent, int bits);
  static BigFloat ratio(long long num, long long den, int bits);

  /// Precision used by default-constructed values on this thread.
  static int default_precision();
  static void set_default_precision(int bits);

  int precision() const { return static_cast<int>(mpfr_get_prec(v_)); }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  /// Scientific notation with `digits` significant decimal digits.
  std::string to_string(int digits) const;

  bool is_nan() const { return mpfr_nan_p(v_) != 0; }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }

  mpfr_srcptr get() const { return v_; }
  mpfr_ptr get() { return v_; }

  BigFloat& operator+=(const BigFloat& o);
  BigFloat& operator-=(const BigFloat& o);
  BigFloat& operator*=(const BigFloat& o);
  BigFloat& operator/=(const BigFloat& o);

  friend BigFloat operator-(const BigFloat& a);
  friend BigFloat operator+(const BigFloat& a, const BigFloat& b);
  friend BigFloat operator-(const BigFloat& a, const BigFloat& b);
  friend BigFloat operator*(const BigFloat& a, const BigFloat& b);
  friend BigFloat operator/(const BigFloat& a, const BigFloat& b);
  friend BigFloat operator+(const BigFloat& a, double b);
  friend BigFloat operator+(double a, const BigFloat& b);
  friend BigFloat operator-(const BigFloat& a, double b);
  friend BigFloat operator-(double a, const BigFloat& b);
  friend BigFloat operator*(const BigFloat& a, double b);
  friend BigFloat operator*(double a, const BigFloat& b);
  friend BigFloat operator/(const BigFloat& a, double b);
  friend BigFloat operator/(double a, const BigFloat& b);

  friend bool operator==(const BigFloat& a, const BigFloat& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend bool operator==(const BigFloat& a, double b) { return !a.is_nan() && !std::isnan(b) && mpfr_cmp_d(a.v_, b) == 0; }
  friend std::partial_ordering operator<=>(const BigFloat& a, const BigFloat& b);
  friend std::partial_ordering operator<=>(const BigFloat& a, double b);

 private:
  explicit BigFloat(int bits, std::nullptr_t);  // uninitialised value at `bits`
  mpfr_t v_;
};

BigFloat sqrt(const BigFloat& x);
BigFloat abs(const BigFloat& x);
BigFloat log(const BigFloat& x);
// double overloads so generic code can call these unqualified
inline double sqrt(double x) { return std::sqrt(x); }
inline double abs(double x) { return std::fabs(x); }
inline double log(double x) { return std::log(x); }
inline bool isnan(const BigFloat& x) { return x.is_nan(); }
inline double to_double(const BigFloat& x) { return x.to_double(); }
inline double to_double(double x) { return x; }

/// Precision-aware factory for constants of scalar type S.
template <class S>
class Context;

template <>
class Context<double> {
 public:
  using Scalar = double;

  explicit Context(PrecisionConfig cfg = PrecisionConfig::hardware());

  const PrecisionConfig& config() const { return cfg_; }
  int bits() const { return 53; }
  double num(double v) const { return v; }
  double ratio(long long n, long long d) const { return static_cast<double>(n) / static_cast<double>(d); }
  double pow2(long e) const { return std::ldexp(1.0, static_cast<int>(e)); }
  double parse(std::string_view text) const;
  std::string format(double v) const;
  /// Boundary slack and termination threshold, 2^-(bits/2).
  double slack() const { return slack_; }

 private:
  PrecisionConfig cfg_;
  double slack_;
};

template <>
class Context<BigFloat> {
 public:
  using Scalar = BigFloat;

  explicit Context(PrecisionConfig cfg);

  const PrecisionConfig& config() const { return cfg_; }
  int bits() const { return cfg_.mantissa_bits; }
  BigFloat num(double v) const { return BigFloat(v, bits()); }
  BigFloat ratio(long long n, long long d) const { return BigFloat::ratio(n, d, bits()); }
  BigFloat pow2(long e) const { return BigFloat::pow2(e, bits()); }
  BigFloat parse(std::string_view text) const { return BigFloat::parse(text, bits()); }
  std::string format(const BigFloat& v) const { return v.to_string(cfg_.decimal_digits()); }
  const BigFloat& slack() const { return slack_; }

 private:
  PrecisionConfig cfg_;
  BigFloat slack_;
};

using HardwareContext = Context<double>;
using ExtendedContext = Context<BigFloat>;

/// Runtime handle over either backend; `visit` hands the typed context to a
/// generic callable.
class ScalarContext {
 public:
  explicit ScalarContext(PrecisionConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const PrecisionConfig& config() const { return cfg_; }
  int bits() const { return cfg_.bits(); }

  template <class F>
  decltype(auto) visit(F&& f) const {
    if (cfg_.is_extended()) {
      BigFloat::set_default_precision(cfg_.mantissa_bits);
      return std::forward<F>(f)(Context<BigFloat>(cfg_));
    }
    return std::forward<F>(f)(Context<double>(cfg_));
  }

 private:
  PrecisionConfig cfg_;
};

ScalarContext make_context(const PrecisionConfig& cfg);

}  // namespace fwlb
