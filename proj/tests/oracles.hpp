#pragma once

// Reference implementations kept deliberately naive: plain loops in long
// double, no shared code with the library beyond the Matrix container.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "trisemi/genset.hpp"
#include "trisemi/matcore.hpp"

namespace oracle {

using C = std::complex<long double>;
using Mat = std::vector<std::vector<C>>;

inline Mat from(const trisemi::Matrix& m) {
  Mat out(m.dim(), std::vector<C>(m.dim()));
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out[i][j] = C(m(i, j).real(), m(i, j).imag());
  return out;
}

inline Mat identity(std::size_t n) {
  Mat out(n, std::vector<C>(n));
  for (std::size_t i = 0; i < n; ++i) out[i][i] = 1.0L;
  return out;
}

inline Mat mul(const Mat& a, const Mat& b) {
  const std::size_t n = a.size();
  Mat out(n, std::vector<C>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Mat pow(const Mat& a, std::uint64_t k) {
  Mat out = identity(a.size());
  for (std::uint64_t i = 0; i < k; ++i) out = mul(out, a);
  return out;
}

inline long double sup_diff(const Mat& a, const trisemi::Matrix& b) {
  long double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      m = std::max(m, std::abs(a[i][j] - C(b(i, j).real(), b(i, j).imag())));
  return m;
}

inline long double sup(const Mat& a) {
  long double m = 0;
  for (const auto& row : a)
    for (const auto& x : row) m = std::max(m, std::abs(x));
  return m;
}

/// Word product by repeated multiplication (small exponents only).
inline Mat eval_word(const trisemi::GeneratorSet& g, const trisemi::Word& w, std::size_t m) {
  Mat out = identity(m);
  for (const auto& f : w.factors) {
    const Mat gen = from(g.generator(f.gen).block(m));
    for (std::uint64_t k = 0; k < f.exp; ++k) out = mul(out, gen);
  }
  return out;
}

/// Offset first, then row.
inline bool delta_less(int r1, int s1, int r2, int s2) {
  if (r1 - s1 != r2 - s2) return r1 - s1 < r2 - s2;
  return r1 < r2;
}

struct DiagBest {
  std::vector<std::uint64_t> m;
  double error = std::numeric_limits<double>::infinity();
};

/// Smallest max_i |beta_i - b_i| over the box, beta the diagonal of
/// D^m A^m0; real targets need matching signs.  Lexicographic first on ties.
inline DiagBest diag_exhaustive(const trisemi::GeneratorSet& g, const std::vector<trisemi::Scalar>& b,
                                std::uint64_t box) {
  const std::size_t G = g.count();
  const std::size_t n = g.n;
  std::vector<std::vector<trisemi::Scalar>> diags;
  for (std::size_t a = 0; a < G; ++a) diags.push_back(g.generator_diag(a));
  DiagBest best;
  std::vector<std::uint64_t> m(G, 0);
  for (;;) {
    double err = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      C beta = 1.0L;
      for (std::size_t a = 0; a < G; ++a)
        for (std::uint64_t k = 0; k < m[a]; ++k) beta *= C(diags[a][i].real(), diags[a][i].imag());
      if (g.field == trisemi::FieldTag::real && (beta.real() < 0) != (b[i].real() < 0)) ok = false;
      err = std::max(err, static_cast<double>(std::abs(beta - C(b[i].real(), b[i].imag()))));
    }
    if (ok && err < best.error) {
      best.error = err;
      best.m = m;
    }
    std::size_t k = G;
    bool done = true;
    while (k > 0) {
      --k;
      if (m[k] < box) {
        ++m[k];
        done = false;
        break;
      }
      m[k] = 0;
    }
    if (done) break;
  }
  return best;
}

}  // namespace oracle
