#include "trisemi/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "trisemi/ordering.hpp"

namespace trisemi {

std::string_view to_string(FieldTag f) { return f == FieldTag::real ? "real" : "complex"; }

FieldTag parse_field(std::string_view s) {
  if (s == "real") return FieldTag::real;
  if (s == "complex") return FieldTag::complex;
  throw InvalidInput("unknown field '" + std::string(s) + "' (expected real|complex)");
}

Matrix::Matrix(std::size_t n, FieldTag field) : n_(n), field_(field), a_(n * n, Scalar{}) {
  if (n == 0) throw InvalidInput("matrix dimension must be >= 1");
}

Matrix Matrix::identity(std::size_t n, FieldTag field) {
  Matrix m(n, field);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const Scalar> d, FieldTag field) {
  Matrix m(d.size(), field);
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<Scalar>>& rows, FieldTag field) {
  Matrix m(rows.size(), field);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size())
      throw InvalidInput("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                         " entries, expected " + std::to_string(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<Scalar> Matrix::diag() const {
  std::vector<Scalar> d(n_);
  for (std::size_t i = 0; i < n_; ++i) d[i] = (*this)(i, i);
  return d;
}

Matrix Matrix::block(std::size_t m) const {
  if (m == 0 || m > n_) throw InvalidInput("block size out of range");
  Matrix b(m, field_);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) b(i, j) = (*this)(i, j);
  return b;
}

bool Matrix::is_lower_triangular() const {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if ((*this)(i, j) != Scalar{}) return false;
  return true;
}

bool Matrix::is_diagonal() const {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (i != j && (*this)(i, j) != Scalar{}) return false;
  return true;
}

namespace {

void check_compatible(const Matrix& a, const Matrix& b, const char* op) {
  if (a.dim() != b.dim())
    throw InvalidInput(std::string(op) + ": dimension mismatch " + std::to_string(a.dim()) + " vs " +
                       std::to_string(b.dim()));
  if (a.field() != b.field()) throw InvalidInput(std::string(op) + ": field mismatch");
}

}  // namespace

Matrix& Matrix::operator+=(const Matrix& other) {
  check_compatible(*this, other, "add");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += other.a_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  check_compatible(*this, other, "sub");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= other.a_[k];
  return *this;
}

Matrix& Matrix::operator*=(Scalar s) {
  for (auto& x : a_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Scalar s, Matrix a) { return a *= s; }

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  check_compatible(a, b, "mat_mul");
  const std::size_t n = a.dim();
  Matrix c(n, a.field());
  if (a.is_lower_triangular() && b.is_lower_triangular()) {
    // Upper entries stay structural zeros.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        Scalar acc{};
        for (std::size_t l = j; l <= i; ++l) acc += a(i, l) * b(l, j);
        c(i, j) = acc;
      }
    return c;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Scalar acc{};
      for (std::size_t l = 0; l < n; ++l) acc += a(i, l) * b(l, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix mat_pow(const Matrix& a, std::uint64_t k) {
  Matrix result = Matrix::identity(a.dim(), a.field());
  Matrix base = a;
  bool first = true;
  while (k > 0) {
    if (k & 1U) {
      result = first ? base : mat_mul(result, base);
      first = false;
    }
    k >>= 1U;
    if (k > 0) base = mat_mul(base, base);
  }
  return result;
}

double sup_norm(const Matrix& a) {
  double m = 0.0;
  for (const auto& x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

Matrix tri_inverse(const Matrix& l) {
  if (!l.is_lower_triangular()) throw InvalidInput("tri_inverse: matrix is not lower triangular");
  const std::size_t n = l.dim();
  Matrix inv(n, l.field());
  for (std::size_t j = 0; j < n; ++j) {
    if (l(j, j) == Scalar{}) throw IllConditioned("tri_inverse: zero diagonal entry");
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      Scalar acc{};
      for (std::size_t k = j; k < i; ++k) acc += l(i, k) * inv(k, j);
      inv(i, j) = -acc / l(i, i);
    }
  }
  return inv;
}

namespace {

void require_separated_moduli(const std::vector<Scalar>& d) {
  std::vector<double> mods;
  mods.reserve(d.size());
  for (const auto& x : d) mods.push_back(std::abs(x));
  std::sort(mods.begin(), mods.end());
  for (std::size_t i = 1; i < mods.size(); ++i) {
    if (mods[i] == 0.0 || mods[i] < kMinModulusRatio * mods[i - 1])
      throw IllConditioned("diagonal moduli " + std::to_string(mods[i - 1]) + " and " +
                           std::to_string(mods[i]) + " are closer than ratio 1.05");
  }
}

}  // namespace

EigenFactors tri_eigendecompose(const Matrix& a) {
  if (!a.is_lower_triangular()) throw InvalidInput("tri_eigendecompose: input is not lower triangular");
  const auto d = a.diag();
  require_separated_moduli(d);
  const std::size_t n = a.dim();
  Matrix s(n, a.field());
  // Column l solves (A - a_l I) x = 0 with x_l = 1, top to bottom.
  for (std::size_t l = 0; l < n; ++l) {
    s(l, l) = 1.0;
    for (std::size_t i = l + 1; i < n; ++i) {
      Scalar acc{};
      for (std::size_t k = l; k < i; ++k) acc += a(i, k) * s(k, l);
      s(i, l) = -acc / (d[i] - d[l]);
    }
  }
  Matrix s_inv = tri_inverse(s);
  return {std::move(s), std::move(s_inv), d};
}

double lambda_bound(const Matrix& a) {
  const auto f = tri_eigendecompose(a);
  for (std::size_t i = 1; i < f.d.size(); ++i)
    if (!(std::abs(f.d[i]) > std::abs(f.d[i - 1])))
      throw PreconditionViolation("lambda_bound: diagonal moduli must increase strictly down the diagonal");
  const std::size_t n = a.dim();
  double lambda = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t l = j; l <= i; ++l) acc += std::abs(f.S(i, l)) * std::abs(f.S_inv(l, j));
      lambda = std::max(lambda, acc);
    }
  return lambda;
}

Scalar scalar_pow(Scalar x, std::uint64_t k) {
  Scalar r = 1.0;
  while (k > 0) {
    if (k & 1U) r *= x;
    k >>= 1U;
    if (k > 0) x *= x;
  }
  return r;
}

Scalar closed_form_Akrs(std::span<const Scalar> d0_diag, const Matrix& t, const IndexPair& rs,
                        std::uint64_t k) {
  const std::size_t n = d0_diag.size();
  if (t.dim() != n) throw InvalidInput("closed_form_Akrs: T dimension does not match D0");
  if (!in_delta(rs, n) || rs.r <= rs.s) throw PreconditionViolation("closed_form_Akrs: need r > s inside the triangle");
  if (k == 0) throw PreconditionViolation("closed_form_Akrs: k must be positive");
  for (std::size_t i = 1; i < n; ++i)
    if (!(std::abs(d0_diag[i - 1]) > 0.0 && std::abs(d0_diag[i]) > std::abs(d0_diag[i - 1])))
      throw PreconditionViolation("closed_form_Akrs: D0 moduli must increase strictly");
  if (!t.is_lower_triangular() || !tri_class_member(t, {rs, n}))
    throw PreconditionViolation("closed_form_Akrs: T is not in the class anchored at (r,s)");
  const Scalar ar = d0_diag[rs.r - 1];
  const Scalar as = d0_diag[rs.s - 1];
  if (ar == as) throw PreconditionViolation("closed_form_Akrs: a_r == a_s");
  return (scalar_pow(ar, k) - scalar_pow(as, k)) / (ar - as) * t(rs.r - 1, rs.s - 1);
}

// ---------------------------------------------------------------------------
// Extended-exponent arithmetic

namespace {

constexpr double kLn2 = 0.69314718055994530942;

ExtScalar normalised(Scalar m, std::int64_t e) {
  const double mx = std::max(std::abs(m.real()), std::abs(m.imag()));
  if (mx == 0.0) return {Scalar{}, 0};
  if (!std::isfinite(mx)) throw OverflowError("extended arithmetic: non-finite mantissa");
  int k = 0;
  std::frexp(mx, &k);
  return {Scalar(std::ldexp(m.real(), -k), std::ldexp(m.imag(), -k)), e + k};
}

}  // namespace

ExtScalar ExtScalar::from(Scalar x) { return normalised(x, 0); }

ExtScalar ExtScalar::from_log(double logmod, Scalar unit) {
  const double f = std::floor(logmod / kLn2);
  const double rest = logmod - f * kLn2;
  return normalised(unit * std::exp(rest), static_cast<std::int64_t>(f));
}

Scalar ExtScalar::value() const {
  if (m == Scalar{}) return {};
  if (e > 2000) return {m.real() == 0.0 ? 0.0 : std::copysign(HUGE_VAL, m.real()),
                        m.imag() == 0.0 ? 0.0 : std::copysign(HUGE_VAL, m.imag())};
  if (e < -2000) return {};
  const int k = static_cast<int>(e);
  return {std::ldexp(m.real(), k), std::ldexp(m.imag(), k)};
}

double ExtScalar::log_modulus() const {
  if (m == Scalar{}) return -std::numeric_limits<double>::infinity();
  return std::log(std::abs(m)) + static_cast<double>(e) * kLn2;
}

ExtScalar ext_mul(const ExtScalar& x, const ExtScalar& y) {
  if (x.m == Scalar{} || y.m == Scalar{}) return {};
  return normalised(x.m * y.m, x.e + y.e);
}

ExtScalar ext_add(const ExtScalar& x, const ExtScalar& y) {
  if (x.m == Scalar{}) return y;
  if (y.m == Scalar{}) return x;
  const ExtScalar& big = x.e >= y.e ? x : y;
  const ExtScalar& small = x.e >= y.e ? y : x;
  const std::int64_t gap = big.e - small.e;
  if (gap > 60) return big;
  const int sh = static_cast<int>(-gap);
  return normalised(big.m + Scalar(std::ldexp(small.m.real(), sh), std::ldexp(small.m.imag(), sh)), big.e);
}

ExtMatrix ExtMatrix::from(const Matrix& m) {
  ExtMatrix out{m.dim(), m.field(), {}};
  out.a.reserve(m.dim() * m.dim());
  for (const auto& x : m.data()) out.a.push_back(ExtScalar::from(x));
  return out;
}

ExtMatrix ExtMatrix::identity(std::size_t n, FieldTag field) { return from(Matrix::identity(n, field)); }

Matrix ExtMatrix::to_matrix() const {
  Matrix out(n, field);
  for (std::size_t i = 0; i < n * n; ++i) out.data()[i] = a[i].value();
  return out;
}

double ExtMatrix::max_log_modulus() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& x : a) best = std::max(best, x.log_modulus());
  return best;
}

namespace {

bool ext_lower(const ExtMatrix& x) {
  for (std::size_t i = 0; i < x.n; ++i)
    for (std::size_t j = i + 1; j < x.n; ++j)
      if (x(i, j).m != Scalar{}) return false;
  return true;
}

}  // namespace

ExtMatrix ext_mat_mul(const ExtMatrix& x, const ExtMatrix& y) {
  if (x.n != y.n) throw InvalidInput("ext_mat_mul: dimension mismatch");
  const std::size_t n = x.n;
  const bool lower = ext_lower(x) && ext_lower(y);
  const FieldTag f = (x.field == FieldTag::complex || y.field == FieldTag::complex) ? FieldTag::complex : FieldTag::real;
  ExtMatrix out{n, f, std::vector<ExtScalar>(n * n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < (lower ? i + 1 : n); ++j) {
      ExtScalar acc{};
      for (std::size_t l = lower ? j : 0; l < (lower ? i + 1 : n); ++l) acc = ext_add(acc, ext_mul(x(i, l), y(l, j)));
      out(i, j) = acc;
    }
  return out;
}

ExtMatrix ext_mat_pow(const ExtMatrix& a, std::uint64_t k) {
  if (k == 0) return ExtMatrix::identity(a.n, a.field);
  ExtMatrix result;
  ExtMatrix base = a;
  bool first = true;
  while (k > 0) {
    if (k & 1U) {
      result = first ? base : ext_mat_mul(result, base);
      first = false;
    }
    k >>= 1U;
    if (k > 0) base = ext_mat_mul(base, base);
  }
  return result;
}

}  // namespace trisemi
