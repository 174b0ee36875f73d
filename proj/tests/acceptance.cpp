// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance                 all criteria
//   acceptance --only 1,2,9    a subset
//   acceptance --child-reports (internal) prints report digests for the thread check

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "trisemi/diagengine.hpp"
#include "trisemi/genset.hpp"
#include "trisemi/ordering.hpp"
#include "trisemi/synth.hpp"
#include "trisemi/verify.hpp"

using namespace trisemi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Scalar random_entry(std::mt19937_64& rng, FieldTag f, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return f == FieldTag::real ? Scalar(u(rng)) : Scalar(u(rng), u(rng));
}

Matrix class_member(std::size_t n, const IndexPair& anchor, std::mt19937_64& rng) {
  Matrix t(n, FieldTag::real);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      if (!oracle::delta_less(static_cast<int>(i + 1), static_cast<int>(j + 1), anchor.r, anchor.s))
        t(i, j) = random_entry(rng, FieldTag::real, 1.0);
  return t;
}

GeneratorSet synthetic_set() {
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

// Lower-triangular targets: diagonal modulus in [0.2, 3], other entries in [-3, 3].
Matrix synthesis_target(std::size_t n, FieldTag f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> mag(0.2, 3.0);
  Matrix b(n, f);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      if (i == j) {
        const double m = mag(rng);
        b(i, j) = f == FieldTag::complex ? std::polar(m, u(rng)) : Scalar((rng() & 1U) ? -m : m);
      } else {
        b(i, j) = f == FieldTag::complex ? Scalar(u(rng), u(rng)) : Scalar(u(rng));
      }
    }
  return b;
}

bool honest(const GeneratorSet& g, const ApproxReport& r, double eps) {
  if (r.word.empty()) return !r.converged && !std::isfinite(r.achieved_error);
  const double again = word_error(g, r.word, r.target);
  return std::abs(again - r.achieved_error) <= 1e-12 * std::max(1.0, r.achieved_error) &&
         r.converged == (r.achieved_error <= eps);
}

// ---------------------------------------------------------------------------

Outcome c1_lemma2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uint64_t bad = 0;
  std::uint64_t total = 0;
  double worst = 0.0;
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto path = elimination_path(n);
    for (int t = 0; t < 500; ++t) {
      const FieldTag f = (t & 1) ? FieldTag::complex : FieldTag::real;
      const Matrix a0 = random_valid_a(n, f, rng);
      const IndexPair rs = path[rng() % path.size()];
      Matrix tt(n, f);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
          if (!oracle::delta_less(static_cast<int>(i + 1), static_cast<int>(j + 1), rs.r, rs.s))
            tt(i, j) = random_entry(rng, f, 1.0);
      if (std::abs(tt(rs.r - 1, rs.s - 1)) < 0.1) tt(rs.r - 1, rs.s - 1) = 1.0;
      const auto d = a0.diag();
      const std::uint64_t k = 1 + rng() % 30;
      const oracle::Mat direct = oracle::pow(oracle::from(Matrix::diagonal(d, f) + tt), k);
      const oracle::C want = direct[rs.r - 1][rs.s - 1];
      const Scalar got = closed_form_Akrs(d, tt, rs, k);
      const long double err = std::abs(oracle::C(got.real(), got.imag()) - want) / std::max(std::abs(want), 1e-300L);
      worst = std::max(worst, static_cast<double>(err));
      ++total;
      if (err > 1e-9L) ++bad;
    }
  }
  const double s = seconds_since(t0);
  return {bad == 0 && s <= 10.0, fmt("%llu/%llu within 1e-9 relative, worst %.3g, %.2f s", (unsigned long long)(total - bad),
                                     (unsigned long long)total, worst, s)};
}

Outcome c2_lemma1() {
  std::mt19937_64 rng(102);
  std::uint64_t bad = 0;
  std::uint64_t total = 0;
  double worst = 0.0;
  for (std::size_t n = 2; n <= 6; ++n)
    for (int t = 0; t < 200; ++t) {
      const Matrix a = random_valid_a(n, (t & 1) ? FieldTag::complex : FieldTag::real, rng);
      const double lam = lambda_bound(a);
      oracle::Mat p = oracle::identity(n);
      const oracle::Mat am = oracle::from(a);
      bool ok = true;
      for (int k = 1; k <= 40; ++k) {
        p = oracle::mul(p, am);
        for (std::size_t i = 0; i < n; ++i) {
          const long double bound = lam * std::pow(std::abs(a(i, i)), k);
          for (std::size_t j = 0; j <= i; ++j) {
            const long double slack = (bound - std::abs(p[i][j])) / bound;
            worst = std::min(worst, static_cast<double>(slack));
            if (slack < -1e-12L) ok = false;
          }
        }
      }
      ++total;
      if (!ok) ++bad;
    }
  const double hand = lambda_bound(Matrix::from_rows({{2.0, 0.0}, {1.0, 3.0}}, FieldTag::real));
  const bool hand_ok = std::abs(hand - 2.0) <= 1e-12;
  return {bad == 0 && hand_ok, fmt("%llu/%llu matrices bounded for k <= 40, min relative slack %.3g, hand lambda %.15g",
                                   (unsigned long long)(total - bad), (unsigned long long)total, worst, hand)};
}

Outcome c3_ordering() {
  std::uint64_t bad = 0;
  std::uint64_t checks = 0;
  for (std::size_t n = 1; n <= 10; ++n) {
    const auto chain = delta_chain(n);
    for (const auto& p : chain)
      for (const auto& q : chain) {
        ++checks;
        const Order o = delta_compare(p, q);
        const Order back = delta_compare(q, p);
        const bool ok = p == q ? (o == Order::EQ && back == Order::EQ)
                               : (o != Order::EQ && back != o && (o == Order::LT) == oracle::delta_less(p.r, p.s, q.r, q.s));
        if (!ok) ++bad;
        if (o != Order::LT) continue;
        for (const auto& r : chain)
          if (delta_compare(q, r) == Order::LT) {
            ++checks;
            if (delta_compare(p, r) != Order::LT) ++bad;
          }
      }
    std::set<std::pair<int, int>> seen;
    std::optional<IndexPair> cur = IndexPair{1, 1};
    while (cur) {
      seen.insert({cur->r, cur->s});
      cur = delta_successor(*cur, n);
    }
    ++checks;
    if (chain.size() != n * (n + 1) / 2 || seen.size() != chain.size()) ++bad;
    if (n >= 2) {
      std::vector<IndexPair> walk{{2, 1}};
      while (auto s = delta_successor(walk.back(), n)) walk.push_back(*s);
      // the induction path: offsets 1..n-1, rows increasing within each offset
      std::vector<IndexPair> want;
      for (int off = 1; off < static_cast<int>(n); ++off)
        for (int r = off + 1; r <= static_cast<int>(n); ++r) want.push_back({r, r - off});
      ++checks;
      if (walk != want || walk.back() != IndexPair{static_cast<int>(n), 1} || elimination_path(n) != want) ++bad;
    }
  }
  return {bad == 0, fmt("%llu checks over n <= 10, %llu violations; chain length 55 at n = 10", (unsigned long long)checks,
                        (unsigned long long)bad)};
}

Outcome c4_triclass() {
  std::mt19937_64 rng(104);
  std::uint64_t bad = 0;
  std::uint64_t products = 0;
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto chain = delta_chain(n);
    for (const auto& anchor : chain) {
      const TriClassTag tag{anchor, n};
      for (int t = 0; t < 1000; ++t) {
        const Matrix x = class_member(n, anchor, rng);
        const Matrix y = class_member(n, anchor, rng);
        ++products;
        if (!tri_class_member(mat_mul(x, y), tag)) ++bad;
        if (t < 20)
          for (const auto& p : chain)
            if (delta_compare(p, anchor) != Order::GT && !tri_class_member(x, {p, n})) ++bad;
      }
    }
  }
  return {bad == 0, fmt("%llu products over every anchor, n = 2..6, %llu violations at 1e-14", (unsigned long long)products,
                        (unsigned long long)bad)};
}

Outcome c5_factor() {
  std::mt19937_64 rng(105);
  std::uint64_t bad = 0;
  std::uint64_t total = 0;
  double worst = 0.0;
  for (std::size_t n = 2; n <= 4; ++n)
    for (int t = 0; t < 200; ++t) {
      const FieldTag f = (t & 1) ? FieldTag::complex : FieldTag::real;
      Matrix a = random_valid_a(n, f, rng);
      for (std::size_t j = 0; j + 1 < n; ++j)
        if (std::abs(a(n - 1, j)) < 0.05) a(n - 1, j) = 0.5;
      Matrix b(n, f);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          Scalar x = random_entry(rng, f, 3.0);
          if (std::abs(x) < 0.05) x = 1.0;
          b(i, j) = x;
        }
      const FactorParts p = factor_target(b, a);
      oracle::Mat left(n, std::vector<oracle::C>(n));
      oracle::Mat right = oracle::identity(n);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j + 1 < n; ++j) left[i][j] = oracle::C(p.R(i, j).real(), p.R(i, j).imag());
        right[i][i] = oracle::C(p.S(i, i).real(), p.S(i, i).imag());
      }
      left[n - 1][n - 1] = oracle::C(p.x.real(), p.x.imag());
      const oracle::Mat prod = oracle::mul(oracle::mul(left, oracle::from(a)), right);
      const double res = static_cast<double>(oracle::sup_diff(prod, b)) / sup_norm(b);
      worst = std::max(worst, res);
      ++total;
      if (!(res <= 1e-9)) ++bad;
    }
  const Matrix a = Matrix::from_rows({{2.0, 0.0}, {1.0, 3.0}}, FieldTag::real);
  const FactorParts h = factor_target(Matrix::from_rows({{4.0, 0.0}, {6.0, 9.0}}, FieldTag::real), a);
  const bool hand = std::abs(h.x - 3.0) <= 1e-12 && std::abs(h.S(0, 0) - 2.0) <= 1e-12 && std::abs(h.R(0, 0) - 1.0) <= 1e-12;
  return {bad == 0 && hand, fmt("%llu/%llu reassemblies within 1e-9 relative (worst %.3g); hand instance x=3 S=2 R=1 %s",
                                (unsigned long long)(total - bad), (unsigned long long)total, worst, hand ? "ok" : "wrong")};
}

Outcome c6_elimination() {
  const GeneratorSet g = synthetic_set();
  const Matrix a = g.generator(0);
  const Matrix ideal = mat_mul(eta_ideal(a, std::vector<Scalar>{2.0, -3.0}), eta_ideal(a, std::vector<Scalar>{1.0, -1.0}));
  const bool exact = ideal == g.d0();
  DiagSolveConfig cfg;
  cfg.tol = 1e-3;
  cfg.budget = 10'000'000;
  const auto states = elimination_cascade(g, 1e-3, cfg);
  const Matrix& res = states.back().residual;
  const double off = std::abs(res(1, 0));
  const double diag = std::max(std::abs(res(0, 0)), std::abs(res(1, 1)));
  const bool ok = exact && states.back().finished && off <= 1e-2 && diag <= 1e-2;
  return {ok, fmt("ideal M1 M2 = D0 %s; cascade delta 1e-3: |residual(2,1)| = %.3g, diagonal deviation %.3g",
                  exact ? "exactly" : "NOT exactly", off, diag)};
}

Outcome c7_diag_engine() {
  const GeneratorSet g = build_default_generators(2, FieldTag::real);
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> mag(0.2, 5.0);
  auto target = [&] {
    std::vector<Scalar> d(2);
    for (auto& x : d) {
      const double m = mag(rng);
      x = (rng() & 1U) ? -m : m;
    }
    return Matrix::diagonal(d, FieldTag::real);
  };
  int conv = 0;
  double slowest = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Matrix b = target();
    DiagSolveConfig cfg;
    cfg.tol = 0.05;
    cfg.budget = 1'000'000;
    const auto t0 = Clock::now();
    const auto r = diag_solve_heuristic(g, diag_log_target(b), cfg);
    const double s = seconds_since(t0);
    slowest = std::max(slowest, s);
    const double err = diag_candidate_error(g, r.exps, diag_log_target(b));
    if (r.converged && err <= 0.05 && s <= 5.0) ++conv;
  }
  int paired_ok = 0;
  for (int t = 0; t < 20; ++t) {
    const Matrix b = target();
    DiagSolveConfig cfg;
    cfg.tol = 0.05;
    cfg.budget = 1'000'000;
    cfg.box = 60;
    const auto h = diag_solve_heuristic(g, diag_log_target(b), cfg);
    cfg.mode = DiagMode::exhaustive;
    const auto o = diag_solve_exhaustive(g, diag_log_target(b), cfg);
    if (h.error >= o.error - 1e-12) ++paired_ok;
  }
  return {conv >= 45 && paired_ok == 20,
          fmt("%d/50 converged within 5 s (slowest %.2f s); heuristic >= oracle on %d/20 paired instances", conv, slowest,
              paired_ok)};
}

struct SynthSummary {
  int converged = 0;
  int honest = 0;
  int n = 0;
  std::size_t longest = 0;
  double slowest = 0.0;
};

SynthSummary synth_batch(std::size_t n, FieldTag f, double eps, int count, std::uint64_t seed, std::size_t max_len,
                         double max_s) {
  const GeneratorSet g = build_default_generators(n, f);
  std::mt19937_64 rng(seed);
  SynthSummary s;
  for (int k = 0; k < count; ++k) {
    const Matrix b = synthesis_target(n, f, rng);
    const auto t0 = Clock::now();
    const ApproxReport r = approx_triangular(g, b, eps, 10'000'000, static_cast<std::uint64_t>(k));
    const double sec = seconds_since(t0);
    ++s.n;
    s.slowest = std::max(s.slowest, sec);
    s.longest = std::max(s.longest, r.word.length());
    const bool h = honest(g, r, eps);
    s.honest += h;
    if (r.converged && h && r.word.length() <= max_len && sec <= max_s) ++s.converged;
    std::printf("    n=%zu %s target %2d: converged=%d error=%.4g length=%zu %.2f s\n", n, std::string(to_string(f)).c_str(),
                k, r.converged ? 1 : 0, r.achieved_error, r.word.length(), sec);
    std::fflush(stdout);
  }
  return s;
}

Outcome c8_synthesis() {
  const SynthSummary s = synth_batch(2, FieldTag::real, 0.1, 20, 108, 100'000, 60.0);
  return {s.converged >= 16 && s.honest == s.n,
          fmt("%d/20 converged (length <= 1e5, <= 60 s); longest word %zu, slowest %.2f s; %d/20 honest to 1e-12",
              s.converged, s.longest, s.slowest, s.honest)};
}

Outcome c9_stretch() {
  const SynthSummary r3 = synth_batch(3, FieldTag::real, 0.5, 10, 109, std::numeric_limits<std::size_t>::max(), 1e9);
  const SynthSummary c2 = synth_batch(2, FieldTag::complex, 0.2, 10, 110, std::numeric_limits<std::size_t>::max(), 1e9);
  const bool ok = r3.converged >= 5 && c2.converged >= 5 && r3.honest == r3.n && c2.honest == c2.n;
  return {ok, fmt("n=3 real eps 0.5: %d/10 converged; n=2 complex eps 0.2: %d/10 converged; honest %d/10 and %d/10",
                  r3.converged, c2.converged, r3.honest, c2.honest)};
}

std::string report_digest() {
  std::ostringstream os;
  os.precision(17);
  const GeneratorSet g = build_default_generators(2, FieldTag::real);
  std::mt19937_64 rng(1010);
  for (int k = 0; k < 3; ++k) {
    const Matrix b = synthesis_target(2, FieldTag::real, rng);
    const ApproxReport r = approx_triangular(g, b, 0.1, 10'000'000, static_cast<std::uint64_t>(k));
    os << r.achieved_error << ' ' << r.stats.nodes << ' ' << word_to_text(r.word).size() << ' ';
    for (const auto& f : r.word.factors) os << f.gen << ':' << f.exp << ',';
    os << '\n';
  }
  const ApproxReport d =
      diag_closure_word(g, Matrix::diagonal(std::vector<Scalar>{-1.3, 0.45}, FieldTag::real), 0.05, 1'000'000);
  os << d.achieved_error << ' ' << d.stats.nodes << ' ' << word_to_text(d.word) << '\n';
  return os.str();
}

Outcome c10_homomorphism(const std::string& self) {
  std::mt19937_64 rng(110);
  int bad = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + t % 3;
    const FieldTag f = (t & 1) ? FieldTag::complex : FieldTag::real;
    const GeneratorSet g = build_default_generators(n, f);
    Word w;
    const int len = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < len; ++i) w.append(Factor{rng() % g.count(), 1 + rng() % 40});
    const ExtMatrix full = eval_word_ext(g, w, n);
    for (std::size_t m = 1; m < n; ++m) {
      const ExtMatrix small = eval_word_ext(g, w, m);
      const ExtMatrix reduced = eval_word_ext(sigma_reduce(g, m), w, m);
      const double ref = small.max_log_modulus();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          for (const ExtMatrix* other : {&full, &reduced}) {
            const ExtScalar diff = ext_add((*other)(i, j), ExtScalar{-small(i, j).m, small(i, j).e});
            if (diff.m != Scalar{} && diff.log_modulus() > std::log(1e-12) + ref) ++bad;
          }
    }
  }
  std::vector<std::string> digests;
  for (const char* th : {"1", "2", "8"}) {
    const std::string cmd = "TRISEMI_THREADS=" + std::string(th) + " '" + self + "' --child-reports";
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    if (p) {
      char buf[4096];
      std::size_t got = 0;
      while ((got = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, got);
      pclose(p);
    }
    digests.push_back(out);
  }
  const bool same = !digests[0].empty() && digests[0] == digests[1] && digests[0] == digests[2];
  return {bad == 0 && same, fmt("500 words: %d block mismatches at 1e-12; reports across 1/2/8 threads %s", bad,
                                same ? "identical" : "DIFFER")};
}

std::string self_path(const char* argv0) {
  char buf[4096];
  const ssize_t k = readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (k > 0) return std::string(buf, static_cast<std::size_t>(k));
  return argv0;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--child-reports") {
      std::fputs(report_digest().c_str(), stdout);
      return 0;
    }
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    }
  }
  const std::string self = self_path(argv[0]);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, c1_lemma2},       {2, c2_lemma1},      {3, c3_ordering},  {4, c4_triclass},
      {5, c5_factor},       {6, c6_elimination}, {7, c7_diag_engine}, {8, c8_synthesis},
      {9, c9_stretch},      {10, [&] { return c10_homomorphism(self); }}};
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
