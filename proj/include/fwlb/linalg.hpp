#pragma once

// Minimal dense linear algebra over a generic scalar. Dimensions here are
// tiny (d <= 10 in practice), so plain loops over std::vector are enough and
// keep everything usable with BigFloat.

#include <cmath>
#include <cstddef>
#include <vector>

#include "fwlb/error.hpp"
#include "fwlb/numeric.hpp"

namespace fwlb {

template <class S>
using Vec = std::vector<S>;

template <class S>
S dot(const Vec<S>& a, const Vec<S>& b) {
  S acc = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) acc = acc + a[i] * b[i];
  return acc;
}

template <class S>
S norm(const Vec<S>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

template <class S>
Vec<S> operator+(const Vec<S>& a, const Vec<S>& b) {
  Vec<S> out(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <class S>
Vec<S> operator-(const Vec<S>& a, const Vec<S>& b) {
  Vec<S> out(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <class S>
Vec<S> scaled(const S& k, const Vec<S>& a) {
  Vec<S> out(a);
  for (auto& v : out) v = k * v;
  return out;
}

/// (1 - gamma) x + gamma v
template <class S>
Vec<S> convex_step(const Vec<S>& x, const Vec<S>& v, const S& gamma) {
  Vec<S> out(x);
  const S keep = 1.0 - gamma;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = keep * x[i] + gamma * v[i];
  return out;
}

/// Square matrix, row-major.
template <class S>
struct Mat {
  std::size_t n = 0;
  std::vector<S> a;

  Mat() = default;
  Mat(std::size_t dim, const S& fill) : n(dim), a(dim * dim, fill) {}

  S& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const S& operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

template <class S>
Vec<S> operator*(const Mat<S>& m, const Vec<S>& x) {
  Vec<S> out(x);
  for (std::size_t i = 0; i < m.n; ++i) {
    S acc = m(i, 0) * x[0];
    for (std::size_t j = 1; j < m.n; ++j) acc = acc + m(i, j) * x[j];
    out[i] = acc;
  }
  return out;
}

template <class S>
struct SymmetricEigen {
  Vec<S> values;  // ascending
  Mat<S> vectors; // column k is the eigenvector of values[k]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Converges quadratically; sweeps stop once the off-diagonal mass drops
/// below `tol` times the Frobenius norm.
template <class S>
SymmetricEigen<S> jacobi_eigen(Mat<S> a, const S& tol, int max_sweeps = 100) {
  using std::abs;
  using std::sqrt;
  const std::size_t n = a.n;
  Mat<S> v(n, a(0, 0) * 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = v(i, i) + 1.0;

  S frob = a(0, 0) * 0.0;
  for (const auto& x : a.a) frob = frob + x * x;
  frob = sqrt(frob);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    S off = a(0, 0) * 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off = off + a(i, j) * a(i, j);
    if (!(sqrt(off) > tol * frob)) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const S theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const S sign = theta < 0.0 ? a(0, 0) * 0.0 - 1.0 : a(0, 0) * 0.0 + 1.0;
        const S t = sign / (abs(theta) + sqrt(theta * theta + 1.0));
        const S c = 1.0 / sqrt(t * t + 1.0);
        const S s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const S akp = a(k, p);
          const S akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const S apk = a(p, k);
          const S aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const S vkp = v(k, p);
          const S vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  SymmetricEigen<S> out;
  out.values.resize(n);
  out.vectors = v;
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  // selection sort keeps columns aligned with values
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (out.values[j] < out.values[best]) best = j;
    if (best != i) {
      std::swap(out.values[i], out.values[best]);
      for (std::size_t k = 0; k < n; ++k) std::swap(out.vectors(k, i), out.vectors(k, best));
    }
  }
  return out;
}

/// V f(Lambda) V^T for a precomputed eigendecomposition.
template <class S, class Fn>
Mat<S> spectral_function(const SymmetricEigen<S>& eig, Fn&& f) {
  const std::size_t n = eig.values.size();
  Vec<S> fv;
  fv.reserve(n);
  for (const auto& lam : eig.values) fv.push_back(f(lam));
  Mat<S> out(n, eig.values[0] * 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      S acc = eig.vectors(i, 0) * fv[0] * eig.vectors(j, 0);
      for (std::size_t k = 1; k < n; ++k) acc = acc + eig.vectors(i, k) * fv[k] * eig.vectors(j, k);
      out(i, j) = acc;
    }
  return out;
}

}  // namespace fwlb
