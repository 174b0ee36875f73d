#include "trisemi/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "trisemi/genset.hpp"
#include "trisemi/ordering.hpp"
#include "trisemi/synth.hpp"

namespace trisemi {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Scalar random_entry(Rng& rng, FieldTag f, double scale) {
  if (f == FieldTag::real) return uniform(rng, -scale, scale);
  return std::polar(uniform(rng, 0.0, scale), uniform(rng, 0.0, 2.0 * std::numbers::pi));
}

Scalar random_unit(Rng& rng, FieldTag f) {
  if (f == FieldTag::real) return (rng() & 1U) ? -1.0 : 1.0;
  return std::polar(1.0, uniform(rng, 0.0, 2.0 * std::numbers::pi));
}

// Lower-triangular matrix vanishing before `anchor`, with a nonzero anchor entry.
Matrix random_class_member(std::size_t n, const IndexPair& anchor, FieldTag f, Rng& rng) {
  Matrix t(n, f);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const IndexPair p{static_cast<int>(i + 1), static_cast<int>(j + 1)};
      if (delta_compare(p, anchor) == Order::LT) continue;
      t(i, j) = random_entry(rng, f, 1.0);
    }
  auto& x = t(static_cast<std::size_t>(anchor.r - 1), static_cast<std::size_t>(anchor.s - 1));
  if (std::abs(x) < 0.1) x = random_unit(rng, f);
  return t;
}

// Strictly lower part of a class member.
Matrix strictly_lower(Matrix t) {
  for (std::size_t i = 0; i < t.dim(); ++i) t(i, i) = 0.0;
  return t;
}

bool rel_close(Scalar x, Scalar y, double tol) {
  const double scale = std::max({std::abs(x), std::abs(y), 1e-300});
  return std::abs(x - y) <= tol * scale;
}

void tally(PropertyCount& p, bool ok) {
  ++p.total;
  if (ok) ++p.passed;
}

SuiteReport suite_order(std::size_t n) {
  SuiteReport rep{"order", {{"totality"}, {"transitivity"}, {"chain length"}, {"elimination path"}}};
  const auto chain = delta_chain(n);
  for (const auto& p : chain)
    for (const auto& q : chain) {
      const Order a = delta_compare(p, q);
      const Order b = delta_compare(q, p);
      const bool ok = (p == q) ? (a == Order::EQ && b == Order::EQ)
                               : ((a == Order::LT && b == Order::GT) || (a == Order::GT && b == Order::LT));
      tally(rep.properties[0], ok);
    }
  for (const auto& p : chain)
    for (const auto& q : chain) {
      if (delta_compare(p, q) != Order::LT) continue;
      for (const auto& r : chain)
        if (delta_compare(q, r) == Order::LT) tally(rep.properties[1], delta_compare(p, r) == Order::LT);
    }
  bool chain_ok = chain.size() == n * (n + 1) / 2 && chain.front() == IndexPair{1, 1};
  for (std::size_t i = 1; i < chain.size(); ++i) chain_ok = chain_ok && delta_compare(chain[i - 1], chain[i]) == Order::LT;
  tally(rep.properties[2], chain_ok);
  if (n >= 2) {
    const auto path = elimination_path(n);
    bool ok = path.size() == n * (n - 1) / 2 && path.front() == IndexPair{2, 1} &&
              path.back() == IndexPair{static_cast<int>(n), 1};
    for (std::size_t i = 1; i < path.size() && ok; ++i) {
      const auto succ = delta_successor(path[i - 1], n);
      ok = succ && *succ == path[i];
    }
    tally(rep.properties[3], ok);
  }
  return rep;
}

SuiteReport suite_lemma1(std::size_t n, std::uint64_t trials, Rng& rng) {
  SuiteReport rep{"lemma1", {{"power bound k<=40"}, {"hand instance lambda=2"}}};
  const Matrix hand = Matrix::from_rows({{2.0, 0.0}, {1.0, 3.0}}, FieldTag::real);
  tally(rep.properties[1], std::abs(lambda_bound(hand) - 2.0) <= 1e-12);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const FieldTag f = (t & 1U) ? FieldTag::complex : FieldTag::real;
    const Matrix a = random_valid_a(n, f, rng);
    const double lam = lambda_bound(a);
    Matrix p = a;
    bool ok = true;
    for (int k = 1; k <= 40 && ok; ++k) {
      if (k > 1) p = mat_mul(p, a);
      for (std::size_t i = 0; i < n && ok; ++i) {
        const double bound = lam * std::pow(std::abs(a(i, i)), k);
        for (std::size_t j = 0; j <= i; ++j)
          if (bound - std::abs(p(i, j)) < -1e-12 * bound) ok = false;
      }
    }
    tally(rep.properties[0], ok);
  }
  return rep;
}

SuiteReport suite_lemma2(std::size_t n, std::uint64_t trials, Rng& rng) {
  SuiteReport rep{"lemma2", {{"closed form vs direct power"}}};
  if (n < 2) return rep;
  const auto path = elimination_path(n);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const FieldTag f = (t & 1U) ? FieldTag::complex : FieldTag::real;
    const Matrix a0 = random_valid_a(n, f, rng);
    const IndexPair rs = path[rng() % path.size()];
    const Matrix tt = strictly_lower(random_class_member(n, rs, f, rng));
    const auto d = a0.diag();
    const Matrix a = Matrix::diagonal(d, f) + tt;
    const std::uint64_t k = 1 + rng() % 30;
    const Scalar direct = mat_pow(a, k)(static_cast<std::size_t>(rs.r - 1), static_cast<std::size_t>(rs.s - 1));
    tally(rep.properties[0], rel_close(closed_form_Akrs(d, tt, rs, k), direct, 1e-9));
  }
  return rep;
}

SuiteReport suite_triclass(std::size_t n, std::uint64_t trials, Rng& rng) {
  SuiteReport rep{"triclass", {{"closed under products"}, {"D + T closed under products"}, {"nesting"}}};
  for (const auto& anchor : delta_chain(n)) {
    const TriClassTag tag{anchor, n};
    const auto succ = delta_successor(anchor, n);
    for (std::uint64_t t = 0; t < trials; ++t) {
      const FieldTag f = (t & 1U) ? FieldTag::complex : FieldTag::real;
      const Matrix x = random_class_member(n, anchor, f, rng);
      const Matrix y = random_class_member(n, anchor, f, rng);
      tally(rep.properties[0], tri_class_member(mat_mul(x, y), tag));
      if (anchor.r > anchor.s) {
        std::vector<Scalar> d1(n);
        std::vector<Scalar> d2(n);
        for (std::size_t i = 0; i < n; ++i) {
          d1[i] = random_entry(rng, f, 2.0);
          d2[i] = random_entry(rng, f, 2.0);
        }
        Matrix prod = mat_mul(Matrix::diagonal(d1, f) + strictly_lower(x), Matrix::diagonal(d2, f) + strictly_lower(y));
        for (std::size_t i = 0; i < n; ++i) prod(i, i) = 0.0;
        tally(rep.properties[1], tri_class_member(prod, tag));
      }
      if (succ) tally(rep.properties[2], tri_class_member(random_class_member(n, *succ, f, rng), tag));
    }
  }
  return rep;
}

bool ext_close(const ExtScalar& x, const ExtScalar& y, double ref_log, double tol) {
  const ExtScalar diff = ext_add(x, ExtScalar{-y.m, y.e});
  return diff.m == Scalar{} || diff.log_modulus() <= std::log(tol) + ref_log;
}

SuiteReport suite_sigma(std::size_t n, std::uint64_t trials, Rng& rng) {
  SuiteReport rep{"sigma", {{"block consistency"}, {"reduced set agrees"}, {"repeat evaluation identical"}}};
  for (FieldTag f : {FieldTag::real, FieldTag::complex}) {
    const GeneratorSet g = build_default_generators(n, f);
    for (std::uint64_t t = 0; t < (trials + 1) / 2; ++t) {
      Word w;
      const std::size_t len = 1 + rng() % 5;
      for (std::size_t i = 0; i < len; ++i) w.append(Factor{rng() % g.count(), 1 + rng() % 50});
      const ExtMatrix full = eval_word_ext(g, w, n);
      const ExtMatrix again = eval_word_ext(g, w, n);
      bool same = true;
      for (std::size_t i = 0; i < full.a.size(); ++i) same = same && full.a[i].m == again.a[i].m && full.a[i].e == again.a[i].e;
      tally(rep.properties[2], same);
      for (std::size_t m = 1; m < n; ++m) {
        const ExtMatrix small = eval_word_ext(g, w, m);
        const ExtMatrix reduced = eval_word_ext(sigma_reduce(g, m), w, m);
        double ref = -std::numeric_limits<double>::infinity();
        for (const auto& x : small.a) ref = std::max(ref, x.log_modulus());
        bool ok1 = true;
        bool ok2 = true;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            ok1 = ok1 && ext_close(full(i, j), small(i, j), ref, 1e-12);
            ok2 = ok2 && ext_close(reduced(i, j), small(i, j), ref, 1e-12);
          }
        tally(rep.properties[0], ok1);
        tally(rep.properties[1], ok2);
      }
    }
  }
  return rep;
}

SuiteReport suite_factor(std::size_t n, std::uint64_t trials, Rng& rng) {
  SuiteReport rep{"factor", {{"reassembly"}, {"R lower triangular"}, {"hand instance"}}};
  {
    const Matrix a = Matrix::from_rows({{2.0, 0.0}, {1.0, 3.0}}, FieldTag::real);
    const Matrix b = Matrix::from_rows({{4.0, 0.0}, {6.0, 9.0}}, FieldTag::real);
    const FactorParts p = factor_target(b, a);
    tally(rep.properties[2], std::abs(p.x - Scalar{3.0}) <= 1e-12 && std::abs(p.S(0, 0) - Scalar{2.0}) <= 1e-12 &&
                                 std::abs(p.R(0, 0) - Scalar{1.0}) <= 1e-12);
  }
  if (n < 2) return rep;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const FieldTag f = (t & 1U) ? FieldTag::complex : FieldTag::real;
    const std::size_t m = 2 + rng() % (n - 1);
    Matrix a = random_valid_a(m, f, rng);
    Matrix b(m, f);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        Scalar x = random_entry(rng, f, 3.0);
        if (std::abs(x) < 0.05) x = random_unit(rng, f);
        b(i, j) = x;
      }
    for (std::size_t j = 0; j + 1 < m; ++j)
      if (std::abs(a(m - 1, j)) < 0.05) a(m - 1, j) = random_unit(rng, f);
    const FactorParts p = factor_target(b, a);
    Matrix left(m, f);
    Matrix right = Matrix::identity(m, f);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = 0; j + 1 < m; ++j) left(i, j) = p.R(i, j);
      right(i, i) = p.S(i, i);
    }
    left(m - 1, m - 1) = p.x;
    const double res = sup_norm(mat_mul(mat_mul(left, a), right) - b);
    tally(rep.properties[0], res <= 1e-9 * sup_norm(b));
    tally(rep.properties[1], p.R.is_lower_triangular());
  }
  return rep;
}

SuiteReport suite_eliminate(std::size_t n, std::uint64_t trials, Rng& rng) {
  SuiteReport rep{"eliminate", {{"synthetic M1 M2 = D0"}, {"ideal cancellation"}, {"limit entry formula"}}};
  {
    const Matrix a = Matrix::from_rows({{2.0, 0.0}, {1.0, 3.0}}, FieldTag::real);
    const std::vector<Scalar> b2{1.0, -1.0};
    const std::vector<Scalar> b1{2.0, -3.0};
    const Matrix m1 = eta_ideal(a, b1);
    const Matrix m2 = eta_ideal(a, b2);
    const Matrix want1 = Matrix::from_rows({{2.0, 0.0}, {-3.0, -3.0}}, FieldTag::real);
    const Matrix want2 = Matrix::from_rows({{1.0, 0.0}, {-1.0, -1.0}}, FieldTag::real);
    tally(rep.properties[0], m1 == want1 && m2 == want2 && mat_mul(m1, m2) == Matrix::diagonal(a.diag(), FieldTag::real));
  }
  if (n < 2) return rep;
  const auto path = elimination_path(n);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const FieldTag f = (t & 1U) ? FieldTag::complex : FieldTag::real;
    const Matrix a0 = random_valid_a(n, f, rng);
    const IndexPair rs = path[rng() % path.size()];
    const auto r = static_cast<std::size_t>(rs.r - 1);
    const auto s = static_cast<std::size_t>(rs.s - 1);
    const auto d = a0.diag();
    const Matrix w = Matrix::diagonal(d, f) + strictly_lower(random_class_member(n, rs, f, rng));
    std::vector<Scalar> b2(n, Scalar{1.0});
    b2[r] = -1.0;
    std::vector<Scalar> b1(n);
    for (std::size_t i = 0; i < n; ++i) b1[i] = b2[i] * d[i];
    const Matrix prod = mat_mul(eta_ideal(w, b1), eta_ideal(w, b2));
    bool ok = std::abs(prod(r, s)) <= 1e-12 * sup_norm(prod);
    for (std::size_t i = 0; i < n; ++i) {
      ok = ok && rel_close(prod(i, i), d[i], 1e-12);
      for (std::size_t j = 0; j < i; ++j) {
        const IndexPair p{static_cast<int>(i + 1), static_cast<int>(j + 1)};
        if (delta_compare(p, rs) == Order::LT) ok = ok && prod(i, j) == Scalar{};
      }
    }
    tally(rep.properties[1], ok);
    std::vector<Scalar> b(n);
    for (auto& x : b) x = random_entry(rng, f, 3.0) + random_unit(rng, f);
    const Matrix eta = eta_ideal(w, b);
    tally(rep.properties[2], rel_close(eta(r, s), b[r] * w(r, s) / (d[r] - d[s]), 1e-12));
  }
  return rep;
}

}  // namespace

bool SuiteReport::ok() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyCount& p) { return p.ok(); });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"order", "lemma1", "lemma2", "triclass", "sigma", "factor", "eliminate"};
  return names;
}

Matrix random_valid_a(std::size_t n, FieldTag field, std::mt19937_64& rng) {
  Matrix a(n, field);
  double mod = uniform(rng, 0.3, 0.8);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = mod * random_unit(rng, field);
    mod *= uniform(rng, 1.1, 1.6);
    for (std::size_t j = 0; j < i; ++j) a(i, j) = random_entry(rng, field, 1.0);
  }
  return a;
}

std::vector<SuiteReport> run_verify(const std::string& suite, std::size_t n, std::uint64_t trials, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("verify: n must be >= 1");
  const auto& names = suite_names();
  if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
    throw InvalidInput("unknown suite '" + suite + "'");
  std::vector<SuiteReport> out;
  for (const auto& name : names) {
    if (suite != "all" && suite != name) continue;
    Rng rng(seed);
    if (name == "order")
      out.push_back(suite_order(n));
    else if (name == "lemma1")
      out.push_back(suite_lemma1(n, trials, rng));
    else if (name == "lemma2")
      out.push_back(suite_lemma2(n, trials, rng));
    else if (name == "triclass")
      out.push_back(suite_triclass(n, trials, rng));
    else if (name == "sigma")
      out.push_back(suite_sigma(n, trials, rng));
    else if (name == "factor")
      out.push_back(suite_factor(n, trials, rng));
    else
      out.push_back(suite_eliminate(n, trials, rng));
  }
  return out;
}

}  // namespace trisemi
