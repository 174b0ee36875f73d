#pragma once

// Small dense matrices over R or C with the triangular helpers the rest of the
// library is built on.  Indices are 0-based here; the ordering module speaks
// 1-based index pairs.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "trisemi/error.hpp"

namespace trisemi {

enum class FieldTag { real, complex };

std::string_view to_string(FieldTag f);
FieldTag parse_field(std::string_view s);

/// Entries are always stored as (re, im); real-field matrices keep im == 0.
using Scalar = std::complex<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t n, FieldTag field);

  static Matrix identity(std::size_t n, FieldTag field);
  static Matrix diagonal(std::span<const Scalar> d, FieldTag field);
  /// Row-major construction; rows.size() must be n and each row n long.
  static Matrix from_rows(const std::vector<std::vector<Scalar>>& rows, FieldTag field);

  std::size_t dim() const { return n_; }
  FieldTag field() const { return field_; }

  Scalar& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  const Scalar& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  std::span<const Scalar> data() const { return a_; }
  std::span<Scalar> data() { return a_; }

  std::vector<Scalar> diag() const;
  /// Top-left m x m block.
  Matrix block(std::size_t m) const;

  bool is_lower_triangular() const;
  bool is_diagonal() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(Scalar s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t n_ = 0;
  FieldTag field_ = FieldTag::real;
  std::vector<Scalar> a_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Scalar s, Matrix a);

Matrix mat_mul(const Matrix& a, const Matrix& b);
Matrix mat_pow(const Matrix& a, std::uint64_t k);
double sup_norm(const Matrix& a);

/// Inverse of a lower-triangular matrix with nonzero diagonal, by forward substitution.
Matrix tri_inverse(const Matrix& l);

/// A = S diag(d) S^-1 with S unit lower triangular.
struct EigenFactors {
  Matrix S;
  Matrix S_inv;
  std::vector<Scalar> d;
};

/// Minimum ratio between any two distinct diagonal moduli accepted by
/// decomposition-dependent operations.
inline constexpr double kMinModulusRatio = 1.05;

EigenFactors tri_eigendecompose(const Matrix& a);

/// Instance constant with |A^k|_ij <= lambda |a_i|^k for every k >= 1.
/// Requires strictly increasing diagonal moduli.
double lambda_bound(const Matrix& a);

/// x^k by repeated squaring (exact for small integers).
Scalar scalar_pow(Scalar x, std::uint64_t k);

/// 1-based (r, s) position in the lower triangle.
struct IndexPair;

/// ((a_r^k - a_s^k) / (a_r - a_s)) * T_rs, the (r,s) entry of (D0 + T)^k
/// when T vanishes on every position preceding (r,s).
Scalar closed_form_Akrs(std::span<const Scalar> d0_diag, const Matrix& t, const IndexPair& rs,
                        std::uint64_t k);

// Entries with an unbounded binary exponent, for products whose factors leave
// the double range: value = m * 2^e with max(|Re m|, |Im m|) in [0.5, 1) or m = 0.
struct ExtScalar {
  Scalar m;
  std::int64_t e = 0;

  static ExtScalar from(Scalar x);
  /// exp(logmod) * unit, unit of modulus 1.
  static ExtScalar from_log(double logmod, Scalar unit);
  /// Back to a double; underflow flushes to zero, overflow gives inf.
  Scalar value() const;
  /// log of the modulus (-inf for zero).
  double log_modulus() const;
};

ExtScalar ext_mul(const ExtScalar& x, const ExtScalar& y);
ExtScalar ext_add(const ExtScalar& x, const ExtScalar& y);

struct ExtMatrix {
  std::size_t n = 0;
  FieldTag field = FieldTag::real;
  std::vector<ExtScalar> a;

  static ExtMatrix from(const Matrix& m);
  static ExtMatrix identity(std::size_t n, FieldTag field);
  ExtScalar& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const ExtScalar& operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
  Matrix to_matrix() const;
  /// Largest log-modulus of any entry (-inf for the zero matrix).
  double max_log_modulus() const;
};

/// Product; only j <= i is formed when both factors are lower triangular.
ExtMatrix ext_mat_mul(const ExtMatrix& x, const ExtMatrix& y);
ExtMatrix ext_mat_pow(const ExtMatrix& a, std::uint64_t k);

}  // namespace trisemi
