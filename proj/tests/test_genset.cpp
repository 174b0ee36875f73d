#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "trisemi/genset.hpp"

using namespace trisemi;

namespace {

GeneratorSet synthetic() {
  GeneratorSet g;
  g.n = 2;
  g.field = FieldTag::real;
  g.a = {2.0, 3.0};
  g.t = Matrix(2, FieldTag::real);
  g.t(1, 0) = 1.0;
  g.d_gens = {Matrix::diagonal(std::vector<Scalar>{-std::exp(-std::sqrt(5.0)), 1.0}, FieldTag::real),
              Matrix::diagonal(std::vector<Scalar>{1.0, -std::exp(-std::sqrt(7.0))}, FieldTag::real)};
  return g;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("default generators, n = 2 real") {
  const GeneratorSet g = build_default_generators(2, FieldTag::real);
  CHECK(g.count() == 3);
  CHECK(g.a[0].real() == doctest::Approx(std::exp(-std::sqrt(3.0))).epsilon(1e-15));
  CHECK(g.a[1].real() == doctest::Approx(std::exp(-std::sqrt(2.0))).epsilon(1e-15));
  CHECK(g.a[0].real() == doctest::Approx(0.17692120631776423).epsilon(1e-15));
  CHECK(g.a[1].real() == doctest::Approx(0.24311673443421419).epsilon(1e-15));
  CHECK(g.d_gens[0](0, 0).real() == doctest::Approx(-std::exp(std::sqrt(5.0))));
  CHECK(g.d_gens[0](1, 1) == Scalar(1.0));
  CHECK(g.d_gens[1](1, 1).real() == doctest::Approx(-std::exp(std::sqrt(7.0))));
  CHECK(g.t(1, 0) == Scalar(1.0));
  CHECK(validate_generators(g).empty());
}

TEST_CASE("default generators, n = 1") {
  const GeneratorSet g = build_default_generators(1, FieldTag::real);
  CHECK(g.count() == 2);
  CHECK(g.a[0].real() == doctest::Approx(std::exp(-std::sqrt(2.0))));
  CHECK(g.d_gens[0](0, 0).real() == doctest::Approx(-std::exp(std::sqrt(5.0))));
  CHECK_THROWS_AS(build_default_generators(0, FieldTag::real), InvalidInput);
}

TEST_CASE("default log-moduli: v0 negative, v_j on positive axes") {
  for (std::size_t n = 1; n <= 8; ++n) {
    const GeneratorSet g = build_default_generators(n, FieldTag::complex);
    for (const auto& x : g.generator_diag(0)) CHECK(std::log(std::abs(x)) < 0.0);
    for (std::size_t j = 1; j <= n; ++j) {
      const auto d = g.generator_diag(j);
      for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 == j)
          CHECK(std::log(std::abs(d[i])) > 0.0);
        else
          CHECK(std::abs(std::log(std::abs(d[i]))) <= 1e-15);
      }
    }
  }
}

TEST_CASE("defaults validate for n <= 8, both fields, several seeds") {
  for (std::size_t n = 1; n <= 8; ++n)
    for (FieldTag f : {FieldTag::real, FieldTag::complex})
      for (std::uint64_t s = 0; s < 10; ++s) CHECK(validate_generators(build_default_generators(n, f, s)).empty());
}

TEST_CASE("validation reports violations") {
  GeneratorSet g = build_default_generators(2, FieldTag::real);
  g.a = {3.0, 2.0};
  CHECK(contains(validate_generators(g), "ineqdiag at i=2"));
  GeneratorSet h = build_default_generators(3, FieldTag::real);
  h.t(2, 0) = 0.0;
  CHECK(contains(validate_generators(h), "condtr at (3,1)"));
}

TEST_CASE("sigma_reduce") {
  const GeneratorSet g = build_default_generators(3, FieldTag::real);
  const GeneratorSet same = sigma_reduce(g, 3);
  CHECK(generators_to_json(same) == generators_to_json(g));
  const GeneratorSet r = sigma_reduce(g, 2);
  CHECK(r.n == 2);
  CHECK(r.a[0] == g.a[0]);
  CHECK(r.a[1] == g.a[1]);
  CHECK(r.d_gens.size() == 3);
  CHECK(r.d_gens[2] == Matrix::identity(2, FieldTag::real));
  CHECK_THROWS_AS(sigma_reduce(g, 0), InvalidInput);
  CHECK_THROWS_AS(sigma_reduce(g, 4), InvalidInput);
}

TEST_CASE("eval_word hand instances") {
  const GeneratorSet g = build_default_generators(2, FieldTag::real);
  CHECK(eval_word(g, Word{{Factor{1, 1}}}, 2) == g.generator(1));
  const GeneratorSet s = synthetic();
  const Matrix a3 = eval_word(s, Word{{Factor{0, 3}}}, 2);
  CHECK(sup_norm(a3 - Matrix::from_rows({{8.0, 0.0}, {19.0, 27.0}}, FieldTag::real)) <= 1e-12);
  const Matrix x = eval_word(g, Word{{Factor{1, 2}, Factor{2, 1}}});
  const Matrix y = eval_word(g, Word{{Factor{2, 1}, Factor{1, 2}}});
  CHECK(sup_norm(x - y) <= 1e-12 * sup_norm(x));
  CHECK_THROWS_AS(eval_word(g, Word{}), InvalidInput);
  CHECK_THROWS_AS(eval_word(g, Word{{Factor{7, 1}}}), InvalidInput);
  CHECK_THROWS_AS(eval_word(g, Word{{Factor{2, 1000}}}), OverflowError);
}

TEST_CASE("eval_word agrees with repeated multiplication") {
  std::mt19937_64 rng(23);
  for (FieldTag f : {FieldTag::real, FieldTag::complex}) {
    const GeneratorSet g = build_default_generators(3, f);
    for (int t = 0; t < 60; ++t) {
      Word w;
      const int len = 1 + static_cast<int>(rng() % 5);
      for (int i = 0; i < len; ++i) w.append(Factor{rng() % g.count(), 1 + rng() % 6});
      for (std::size_t m = 1; m <= 3; ++m) {
        const Matrix got = eval_word(g, w, m);
        CHECK(got.is_lower_triangular());
        CHECK(oracle::sup_diff(oracle::eval_word(g, w, m), got) <= 1e-12 * (1 + sup_norm(got)));
      }
    }
  }
}

TEST_CASE("diagonal generators commute and blocks are consistent") {
  std::mt19937_64 rng(29);
  const GeneratorSet g = build_default_generators(4, FieldTag::complex);
  for (int t = 0; t < 50; ++t) {
    Word w;
    for (int i = 0; i < 4; ++i) w.append(Factor{1 + rng() % 4, 1 + rng() % 20});
    Word rev;
    for (auto it = w.factors.rbegin(); it != w.factors.rend(); ++it) rev.append(*it);
    const Matrix x = eval_word(g, w);
    CHECK(sup_norm(x - eval_word(g, rev)) <= 1e-12 * sup_norm(x));
    Word mixed = w;
    mixed.append(Factor{0, 1 + rng() % 30});
    const Matrix full = eval_word(g, mixed, 4);
    for (std::size_t m = 1; m < 4; ++m) {
      const Matrix small = eval_word(g, mixed, m);
      CHECK(sup_norm(full.block(m) - small) <= 1e-12 * sup_norm(small));
      CHECK(sup_norm(eval_word(sigma_reduce(g, m), mixed, m) - small) <= 1e-12 * sup_norm(small));
    }
  }
}

TEST_CASE("words: append, totals, text round trip") {
  Word w;
  w.append(Factor{1, 2}).append(Factor{1, 3}).append(Factor{0, 5});
  CHECK(w.length() == 3);
  CHECK(w.totals(3) == std::vector<std::uint64_t>{5, 5, 0});
  CHECK(word_from_text(word_to_text(w)) == w);
  CHECK(repeat(w, 2).length() == 6);
  CHECK(concat(w, w) == repeat(w, 2));
  CHECK_THROWS_AS(word_from_text("1 0\n"), InvalidInput);
  CHECK_THROWS_AS(word_from_text("x 1\n"), InvalidInput);
}

TEST_CASE("generator JSON round trip") {
  for (FieldTag f : {FieldTag::real, FieldTag::complex}) {
    const GeneratorSet g = build_default_generators(3, f);
    const std::string text = generators_to_json(g);
    const GeneratorSet back = generators_from_json(text);
    CHECK(generators_to_json(back) == text);
    CHECK(validate_generators(back).empty());
    CHECK(back.count() == 4);
  }
  CHECK_THROWS_AS(generators_from_json("{"), InvalidInput);
  CHECK_THROWS_AS(generators_from_json("{\"n\": 2}"), InvalidInput);
}

TEST_CASE("first primes") { CHECK(first_primes(6) == std::vector<std::uint64_t>{2, 3, 5, 7, 11, 13}); }
