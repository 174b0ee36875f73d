#include "trisemi/diagengine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>

#include <Eigen/Dense>

namespace trisemi {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0) r += kTwoPi;
  return r;
}

// Signed angle in (-pi, pi].
double centered_angle(double x) {
  double r = wrap_angle(x);
  if (r > std::numbers::pi) r -= kTwoPi;
  return r;
}

// |exp(dl + i dth) - 1|
double unit_distance(double dl, double dth) {
  if (dth == 0.0) return std::abs(std::expm1(dl));
  const double e = std::exp(dl);
  const double re = e * std::cos(dth) - 1.0;
  const double im = e * std::sin(dth);
  return std::hypot(re, im);
}

// Per-generator log data for the diagonal parts.
struct LogTable {
  FieldTag field = FieldTag::real;
  std::size_t n = 0;
  std::size_t gens = 0;
  std::vector<double> lm;  // gens x n, log|g_alpha,i|
  std::vector<double> ph;  // gens x n, arg (complex) or sign bit (real)

  explicit LogTable(const GeneratorSet& g) : field(g.field), n(g.n), gens(g.count()) {
    lm.resize(gens * n);
    ph.resize(gens * n);
    for (std::size_t a = 0; a < gens; ++a) {
      const auto d = g.generator_diag(a);
      for (std::size_t i = 0; i < n; ++i) {
        if (d[i] == Scalar{}) throw InvalidInput("diagonal engine: generator " + std::to_string(a) + " has a zero diagonal entry");
        lm[a * n + i] = std::log(std::abs(d[i]));
        if (field == FieldTag::real)
          ph[a * n + i] = d[i].real() < 0.0 ? 1.0 : 0.0;
        else
          ph[a * n + i] = std::arg(d[i]);
      }
    }
  }
  double logmod(std::size_t a, std::size_t i) const { return lm[a * n + i]; }
  double phase(std::size_t a, std::size_t i) const { return ph[a * n + i]; }
};

void check_target(const GeneratorSet& g, const DiagTarget& t) {
  if (t.dim() != g.n || t.phase.size() != g.n || t.weight.size() != g.n)
    throw InvalidInput("diagonal target dimension does not match the generator set");
  if (t.field != g.field) throw InvalidInput("diagonal target field does not match the generator set");
  for (double x : t.logmag)
    if (!std::isfinite(x)) throw InvalidInput("diagonal target has a non-finite log-modulus (zero entry?)");
}

// Scores candidates; holds the objective and the target.
class Scorer {
 public:
  Scorer(const LogTable& tab, const DiagTarget& t, const DiagObjective& obj) : tab_(tab), t_(t), obj_(obj) {
    if (obj_.kind == DiagObjective::Kind::ratio && (obj_.r >= tab.n || obj_.s >= tab.n || obj_.r == obj_.s))
      throw InvalidInput("ratio objective needs two distinct coordinates");
  }

  // Full evaluation.  `cutoff`: may return any value > cutoff once the
  // candidate is known to score above it.
  double score(const std::uint64_t* m, double cutoff = std::numeric_limits<double>::infinity()) const {
    const std::size_t n = tab_.n;
    double dl[16];
    double dth[16];
    std::vector<double> dl_big;
    std::vector<double> dth_big;
    double* DL = dl;
    double* DT = dth;
    if (n > 16) {
      dl_big.resize(n);
      dth_big.resize(n);
      DL = dl_big.data();
      DT = dth_big.data();
    }
    const bool real = tab_.field == FieldTag::real;
    const bool sup = obj_.kind == DiagObjective::Kind::sup;
    // Log-moduli first: most candidates are rejected before any phase work.
    for (std::size_t i = 0; i < n; ++i) {
      double l = 0.0;
      for (std::size_t a = 0; a < tab_.gens; ++a)
        if (m[a] != 0) l += static_cast<double>(m[a]) * tab_.logmod(a, i);
      DL[i] = l - t_.logmag[i];
      const double w = t_.weight[i];
      if (!sup || w == 0.0) {
        if (std::abs(DL[i]) > obj_.window) return std::numeric_limits<double>::infinity();
      } else {
        const double lb = w * -std::expm1(-std::abs(DL[i]));
        if (lb > cutoff) return lb;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double p = 0.0;
      for (std::size_t a = 0; a < tab_.gens; ++a) {
        if (m[a] == 0) continue;
        if (real) {
          if (tab_.phase(a, i) != 0.0 && (m[a] & 1U)) p = 1.0 - p;
        } else {
          p += static_cast<double>(m[a]) * tab_.phase(a, i);
        }
      }
      DT[i] = real ? (p != t_.phase[i] ? std::numbers::pi : 0.0) : centered_angle(p - t_.phase[i]);
    }
    if (obj_.kind == DiagObjective::Kind::sup) {
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = t_.weight[i];
        if (w == 0.0) {
          if (std::abs(DL[i]) > obj_.window) return std::numeric_limits<double>::infinity();
          continue;
        }
        if (real && DT[i] != 0.0) return std::numeric_limits<double>::infinity();
        // Cheap lower bound before the exact value.
        const double lb = w * -std::expm1(-std::abs(DL[i]));
        if (lb > cutoff) return lb;
        err = std::max(err, w * unit_distance(DL[i], DT[i]));
        if (err > cutoff) return err;
      }
      return err;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(DL[i]) > obj_.window) return std::numeric_limits<double>::infinity();
      if (real && t_.weight[i] != 0.0 && DT[i] != 0.0) return std::numeric_limits<double>::infinity();
    }
    const double d = DL[obj_.r] - DL[obj_.s];
    const double th = real ? 0.0 : centered_angle(DT[obj_.r] - DT[obj_.s]);
    return unit_distance(d, th);
  }

 private:
  const LogTable& tab_;
  const DiagTarget& t_;
  const DiagObjective& obj_;
};

bool lex_better(double err, const ExponentVector& m, double best_err, const ExponentVector& best) {
  if (err < best_err) return true;
  if (err > best_err || best.m.empty()) return err <= best_err && best.m.empty();
  return m < best;
}

// Sign structure of the real field: which generators' parities matter and
// which parity vectors reproduce the target signs on weighted coordinates.
struct ParityClasses {
  std::vector<bool> relevant;                     // per generator
  std::vector<std::vector<std::uint8_t>> classes;  // feasible full parity vectors, Gray-code order

  ParityClasses(const LogTable& tab, const DiagTarget& t) {
    const std::size_t G = tab.gens;
    relevant.assign(G, false);
    if (tab.field != FieldTag::real) {
      classes.push_back(std::vector<std::uint8_t>(G, 0));
      return;
    }
    std::vector<std::size_t> constrained;
    for (std::size_t i = 0; i < tab.n; ++i)
      if (t.weight[i] != 0.0) constrained.push_back(i);
    std::vector<std::size_t> rel;
    for (std::size_t a = 0; a < G; ++a)
      for (auto i : constrained)
        if (tab.phase(a, i) != 0.0) {
          relevant[a] = true;
          rel.push_back(a);
          break;
        }
    if (rel.size() > 20) throw InvalidInput("too many sign-carrying generators for parity enumeration");
    const std::uint64_t total = 1ULL << rel.size();
    for (std::uint64_t k = 0; k < total; ++k) {
      const std::uint64_t gray = k ^ (k >> 1U);
      std::vector<std::uint8_t> par(G, 0);
      for (std::size_t b = 0; b < rel.size(); ++b) par[rel[b]] = static_cast<std::uint8_t>((gray >> b) & 1U);
      bool ok = true;
      for (auto i : constrained) {
        unsigned s = 0;
        for (std::size_t a = 0; a < G; ++a)
          if (par[a] && tab.phase(a, i) != 0.0) s ^= 1U;
        if (static_cast<double>(s) != t.phase[i]) {
          ok = false;
          break;
        }
      }
      if (ok) classes.push_back(std::move(par));
    }
  }
};

std::uint64_t round_with_parity(double x, bool constrained, std::uint8_t parity) {
  if (x < 0.0) x = 0.0;
  if (!constrained) return static_cast<std::uint64_t>(std::llround(x));
  // Nearest integer of the given parity.
  const double shifted = (x - parity) / 2.0;
  const double k = std::max(0.0, std::round(shifted));
  return static_cast<std::uint64_t>(2.0 * k) + parity;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& a) {
  if (a.cols() == 0) return Eigen::MatrixXd(0, a.rows());
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  return cod.pseudoInverse();
}

std::mutex& drift_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::optional<ExponentVector>>& drift_cache() {
  static std::map<std::string, std::optional<ExponentVector>> c;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

Scalar DiagTarget::value(std::size_t i) const {
  const double mag = std::exp(logmag[i]);
  if (field == FieldTag::real) return phase[i] != 0.0 ? -mag : mag;
  return std::polar(mag, phase[i]);
}

DiagTarget diag_log_target(const Matrix& b) {
  if (!b.is_diagonal()) throw InvalidInput("diagonal target: matrix is not diagonal");
  DiagTarget t = diag_log_target_relative(b.diag(), b.field());
  for (std::size_t i = 0; i < t.dim(); ++i) t.weight[i] = std::abs(b(i, i));
  return t;
}

DiagTarget diag_log_target_relative(std::span<const Scalar> d, FieldTag field) {
  DiagTarget t;
  t.field = field;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == Scalar{})
      throw InvalidInput("diagonal target: zero entry at position " + std::to_string(i + 1));
    t.logmag.push_back(std::log(std::abs(d[i])));
    if (field == FieldTag::real) {
      if (d[i].imag() != 0.0) throw InvalidInput("diagonal target: complex entry in the real field");
      t.phase.push_back(d[i].real() < 0.0 ? 1.0 : 0.0);
    } else {
      t.phase.push_back(wrap_angle(std::arg(d[i])));
    }
    t.weight.push_back(1.0);
  }
  return t;
}

DiagTarget shift_target(DiagTarget t, std::span<const Scalar> base, double power) {
  if (base.size() != t.dim()) throw InvalidInput("shift_target: dimension mismatch");
  for (std::size_t i = 0; i < t.dim(); ++i) {
    t.logmag[i] -= power * std::log(std::abs(base[i]));
    if (t.field == FieldTag::real) {
      const bool flip = base[i].real() < 0.0 && std::fmod(power, 2.0) != 0.0;
      if (flip) t.phase[i] = 1.0 - t.phase[i];
    } else {
      t.phase[i] = wrap_angle(t.phase[i] - power * std::arg(base[i]));
    }
  }
  return t;
}

double diag_candidate_error(const GeneratorSet& g, const ExponentVector& m, const DiagTarget& t,
                            const DiagObjective& obj) {
  check_target(g, t);
  if (m.m.size() != g.count()) throw InvalidInput("exponent vector length differs from generator count");
  const LogTable tab(g);
  return Scorer(tab, t, obj).score(m.m.data());
}

std::vector<Scalar> diag_candidate_value(const GeneratorSet& g, const ExponentVector& m) {
  if (m.m.size() != g.count()) throw InvalidInput("exponent vector length differs from generator count");
  const LogTable tab(g);
  std::vector<Scalar> out(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    double l = 0.0;
    double p = 0.0;
    for (std::size_t a = 0; a < tab.gens; ++a) {
      const double ma = static_cast<double>(m.m[a]);
      l += ma * tab.logmod(a, i);
      if (g.field == FieldTag::real) {
        if (tab.phase(a, i) != 0.0 && (m.m[a] & 1U)) p = 1.0 - p;
      } else {
        p += ma * tab.phase(a, i);
      }
    }
    out[i] = g.field == FieldTag::real ? Scalar(p != 0.0 ? -std::exp(l) : std::exp(l)) : std::polar(std::exp(l), wrap_angle(p));
  }
  return out;
}

Word exponent_word(const ExponentVector& m) {
  Word w;
  for (std::size_t a = 1; a < m.m.size(); ++a)
    if (m.m[a] > 0) w.append(Factor{a, m.m[a]});
  if (!m.m.empty() && m.m[0] > 0) w.append(Factor{0, m.m[0]});
  return w;
}

unsigned worker_threads() {
  unsigned t = 0;
  if (const char* env = std::getenv("TRISEMI_THREADS")) {
    try {
      t = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      t = 0;
    }
  }
  if (t == 0) t = std::max(1U, std::thread::hardware_concurrency());
  return std::min(t, 256U);
}

// ---------------------------------------------------------------------------
// Exhaustive

DiagSolveResult diag_solve_exhaustive(const GeneratorSet& g, const DiagTarget& t, const DiagSolveConfig& cfg) {
  check_target(g, t);
  if (cfg.budget < 1 || !(cfg.tol > 0.0)) throw InvalidInput("diag_solve: need tol > 0 and budget >= 1");
  const LogTable tab(g);
  const Scorer scorer(tab, t, cfg.objective);
  const std::size_t G = tab.gens;
  if (cfg.min_m0 > cfg.box) throw Infeasible("diag_solve_exhaustive: min_m0 exceeds the box");
  double count = static_cast<double>(cfg.box + 1 - cfg.min_m0);
  for (std::size_t a = 1; a < G; ++a) count *= static_cast<double>(cfg.box + 1);
  if (count > static_cast<double>(cfg.budget))
    throw PreconditionViolation("diag_solve_exhaustive: box too large for the budget");

  DiagSolveResult res;
  std::vector<std::uint64_t> m(G, 0);
  m[0] = cfg.min_m0;
  ExponentVector cand;
  for (;;) {
    ++res.nodes;
    const double e = scorer.score(m.data(), res.error);
    if (e < res.error) {  // lexicographic enumeration keeps the smallest vector on ties
      res.error = e;
      res.exps.m = m;
    }
    // odometer, last coordinate fastest
    std::size_t k = G;
    while (k > 0) {
      --k;
      if (m[k] < cfg.box) {
        ++m[k];
        break;
      }
      m[k] = (k == 0) ? cfg.min_m0 : 0;
      if (k == 0) {
        k = G + 1;
        break;
      }
    }
    if (k == G + 1) break;
  }
  if (!std::isfinite(res.error)) throw Infeasible("diag_solve_exhaustive: no exponent vector in the box matches the target signs");
  res.converged = res.error <= cfg.tol;
  return res;
}

// ---------------------------------------------------------------------------
// Heuristic

namespace {

struct Search {
  const LogTable& tab;
  const DiagTarget& target;
  const DiagSolveConfig& cfg;
  Scorer scorer;
  DiagSolveResult res;
  bool done = false;

  Search(const LogTable& t, const DiagTarget& tg, const DiagSolveConfig& c)
      : tab(t), target(tg), cfg(c), scorer(t, tg, c.objective) {}

  bool in_box(const std::vector<std::uint64_t>& m) const {
    if (m[0] < cfg.min_m0) return false;
    return std::all_of(m.begin(), m.end(), [&](std::uint64_t x) { return x <= cfg.box; });
  }

  // Returns true when the search must stop.
  bool consider(const std::vector<std::uint64_t>& m) {
    if (done) return true;
    if (res.nodes >= cfg.budget) {
      done = true;
      return true;
    }
    ++res.nodes;
    if (!in_box(m)) return false;
    const double e = scorer.score(m.data(), res.error);
    ExponentVector v{m};
    if (e < res.error || (e == res.error && std::isfinite(e) && v < res.exps)) {
      res.error = e;
      res.exps = std::move(v);
    }
    if (res.error <= cfg.tol) {
      res.converged = true;
      done = true;
    }
    return done;
  }
};

struct ChunkResult {
  double best_err = std::numeric_limits<double>::infinity();
  ExponentVector best;
  std::uint64_t nodes = 0;  // candidates consumed by this chunk
  bool hit = false;         // a candidate reached tol; `best` is the first one
};

// Fiber scan over m0: for each m0 the remaining exponents come from the
// least-squares relaxation rounded into each feasible parity class.
class FiberScan {
 public:
  FiberScan(const LogTable& tab, const DiagTarget& t, const DiagSolveConfig& cfg, const ParityClasses& pc)
      : tab_(tab), t_(t), cfg_(cfg), pc_(pc), scorer_(tab, t, cfg.objective) {
    const std::size_t n = tab.n;
    const std::size_t K = tab.gens - 1;
    Eigen::MatrixXd v(n, K);
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t i = 0; i < n; ++i) v(i, a) = tab.logmod(a + 1, i);
    const Eigen::MatrixXd p = pinv(v);
    Eigen::VectorXd b(n);
    Eigen::VectorXd v0(n);
    for (std::size_t i = 0; i < n; ++i) {
      b(i) = t.logmag[i];
      v0(i) = tab.logmod(0, i);
    }
    x0_ = p * b;
    dx_ = p * v0;
    // Rest-parity classes per m0 parity.
    for (const auto& c : pc.classes) by_parity_[c[0]].push_back(c);
  }

  std::uint64_t per_m0(std::uint64_t m0) const { return by_parity_[m0 & 1U].size(); }

  ChunkResult run(std::uint64_t m0_lo, std::uint64_t m0_hi, std::uint64_t node_start) const {
    ChunkResult out;
    const std::size_t G = tab_.gens;
    std::vector<std::uint64_t> m(G, 0);
    std::uint64_t node = node_start;
    for (std::uint64_t m0 = m0_lo; m0 < m0_hi; ++m0) {
      const auto& classes = by_parity_[m0 & 1U];
      for (const auto& cls : classes) {
        if (node >= cfg_.budget) return out;
        ++node;
        ++out.nodes;
        m[0] = m0;
        bool ok = true;
        for (std::size_t a = 1; a < G; ++a) {
          const double x = x0_(static_cast<Eigen::Index>(a - 1)) - static_cast<double>(m0) * dx_(static_cast<Eigen::Index>(a - 1));
          m[a] = round_with_parity(x, pc_.relevant[a], cls[a]);
          if (m[a] > cfg_.box) ok = false;
        }
        if (!ok) continue;
        const double cutoff = std::max(out.best_err, cfg_.tol);
        const double e = scorer_.score(m.data(), std::isfinite(out.best_err) ? out.best_err : cutoff);
        if (e < out.best_err || (e == out.best_err && std::isfinite(e) && ExponentVector{m} < out.best)) {
          out.best_err = e;
          out.best.m = m;
        }
        if (e <= cfg_.tol) {
          out.best_err = e;
          out.best.m = m;
          out.hit = true;
          return out;
        }
      }
    }
    return out;
  }

 private:
  const LogTable& tab_;
  const DiagTarget& t_;
  const DiagSolveConfig& cfg_;
  const ParityClasses& pc_;
  Scorer scorer_;
  Eigen::VectorXd x0_;
  Eigen::VectorXd dx_;
  std::vector<std::vector<std::uint8_t>> by_parity_[2];
};

void fiber_scan(Search& s, const ParityClasses& pc) {
  if (s.done) return;
  const FiberScan scan(s.tab, s.target, s.cfg, pc);
  const unsigned threads = worker_threads();
  constexpr std::uint64_t kChunk = 1ULL << 14U;
  std::uint64_t m0 = s.cfg.min_m0;
  const std::uint64_t m0_end = s.cfg.box == std::numeric_limits<std::uint64_t>::max() ? s.cfg.box : s.cfg.box + 1;
  if (scan.per_m0(0) + scan.per_m0(1) == 0) return;
  while (!s.done && m0 < m0_end && s.res.nodes < s.cfg.budget) {
    // Lay out a batch of chunks with known starting node indices.
    struct Job {
      std::uint64_t lo, hi, node_start;
      ChunkResult out;
    };
    std::vector<Job> jobs;
    std::uint64_t node = s.res.nodes;
    for (unsigned k = 0; k < threads && m0 < m0_end && node < s.cfg.budget; ++k) {
      const std::uint64_t hi = std::min(m0_end, m0 + kChunk);
      jobs.push_back({m0, hi, node, {}});
      for (std::uint64_t x = m0; x < hi && node < s.cfg.budget; ++x) node += scan.per_m0(x);
      m0 = hi;
    }
    if (jobs.size() == 1) {
      jobs[0].out = scan.run(jobs[0].lo, jobs[0].hi, jobs[0].node_start);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(jobs.size());
      for (auto& j : jobs) pool.emplace_back([&scan, &j] { j.out = scan.run(j.lo, j.hi, j.node_start); });
      for (auto& th : pool) th.join();
    }
    // Deterministic merge in scan order.
    for (const auto& j : jobs) {
      s.res.nodes = j.node_start + j.out.nodes;
      const auto& c = j.out;
      if (c.hit) {
        s.res.error = c.best_err;
        s.res.exps = c.best;
        s.res.converged = true;
        s.done = true;
        return;
      }
      if (lex_better(c.best_err, c.best, s.res.error, s.res.exps) && std::isfinite(c.best_err)) {
        s.res.error = c.best_err;
        s.res.exps = c.best;
      }
      if (s.res.nodes >= s.cfg.budget) {
        s.done = true;
        return;
      }
    }
  }
}

}  // namespace

DiagSolveResult diag_solve_heuristic(const GeneratorSet& g, const DiagTarget& t, const DiagSolveConfig& cfg) {
  check_target(g, t);
  if (cfg.box < 1 || cfg.budget < 1 || !(cfg.tol > 0.0)) throw InvalidInput("diag_solve: need tol > 0, budget >= 1, box >= 1");
  if (cfg.min_m0 > cfg.box) throw Infeasible("diag_solve_heuristic: min_m0 exceeds the box");
  const LogTable tab(g);
  const ParityClasses pc(tab, t);
  if (pc.classes.empty()) throw Infeasible("diag_solve_heuristic: no parity class reproduces the target signs");
  Search s(tab, t, cfg);
  const std::size_t n = tab.n;
  const std::size_t G = tab.gens;

  // (1) relaxation over all generators, rounded into each parity class.
  Eigen::MatrixXd v(n, G);
  for (std::size_t a = 0; a < G; ++a)
    for (std::size_t i = 0; i < n; ++i) v(i, a) = tab.logmod(a, i);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) b(i) = t.logmag[i];
  const Eigen::VectorXd x = pinv(v) * b;
  auto rounded = [&](const std::vector<std::uint8_t>& cls) {
    std::vector<std::uint64_t> m(G);
    for (std::size_t a = 0; a < G; ++a) m[a] = round_with_parity(x(static_cast<Eigen::Index>(a)), pc.relevant[a], cls[a]);
    m[0] = std::max(m[0], cfg.min_m0);
    if (pc.relevant[0] && ((m[0] ^ cls[0]) & 1U)) ++m[0];
    return m;
  };
  // (2) per-coordinate dithering, width 3.
  for (const auto& cls : pc.classes) {
    const auto base = rounded(cls);
    if (s.consider(base)) break;
    for (std::size_t a = 0; a < G && !s.done; ++a)
      for (int off = -3; off <= 3 && !s.done; ++off) {
        if (off == 0 || (pc.relevant[a] && (off & 1))) continue;
        auto m = base;
        if (off < 0 && m[a] < static_cast<std::uint64_t>(-off)) continue;
        m[a] = static_cast<std::uint64_t>(static_cast<std::int64_t>(m[a]) + off);
        s.consider(m);
      }
  }
  // (3) negativity repair along a drift direction.
  if (!s.done && (x.array() < 0.0).any()) {
    std::optional<ExponentVector> c;
    try {
      c = drift_vector(g);
    } catch (const SpanningFailure&) {
      c.reset();
    }
    if (c) {
      for (const auto& cls : pc.classes) {
        double steps = 0.0;
        for (std::size_t a = 0; a < G; ++a)
          if (x(static_cast<Eigen::Index>(a)) < 0.0 && c->m[a] > 0)
            steps = std::max(steps, std::ceil(-x(static_cast<Eigen::Index>(a)) / (2.0 * static_cast<double>(c->m[a]))));
        std::vector<std::uint64_t> m(G);
        for (std::size_t a = 0; a < G; ++a) {
          const double shifted = x(static_cast<Eigen::Index>(a)) + steps * 2.0 * static_cast<double>(c->m[a]);
          m[a] = round_with_parity(shifted, pc.relevant[a], cls[a]);
        }
        if (s.consider(m)) break;
      }
    }
  }
  // (4) local search, single-coordinate moves (step 2 on sign-carrying generators).
  if (!s.done && std::isfinite(s.res.error)) {
    for (int iter = 0; iter < 1000 && !s.done; ++iter) {
      const ExponentVector start = s.res.exps;
      const double start_err = s.res.error;
      for (std::size_t a = 0; a < G && !s.done; ++a) {
        const std::uint64_t step = pc.relevant[a] ? 2 : 1;
        for (int dir : {-1, 1}) {
          auto m = start.m;
          if (dir < 0 && m[a] < step) continue;
          m[a] = dir < 0 ? m[a] - step : m[a] + step;
          if (s.consider(m)) break;
        }
      }
      if (!(s.res.error < start_err)) break;
    }
  }
  // (5) fiber scan over the exponent of generator 0.
  fiber_scan(s, pc);

  if (s.res.exps.m.empty()) throw Infeasible("diag_solve_heuristic: no feasible candidate inside the box");
  s.res.converged = s.res.error <= cfg.tol;
  return s.res;
}

DiagSolveResult diag_solve(const GeneratorSet& g, const DiagTarget& t, const DiagSolveConfig& cfg) {
  return cfg.mode == DiagMode::exhaustive ? diag_solve_exhaustive(g, t, cfg) : diag_solve_heuristic(g, t, cfg);
}

// ---------------------------------------------------------------------------
// Drift vector

ExponentVector drift_vector(const GeneratorSet& g) {
  const std::string key = generators_to_json(g);
  {
    std::lock_guard lock(drift_mutex());
    auto it = drift_cache().find(key);
    if (it != drift_cache().end()) {
      if (!it->second) throw SpanningFailure("drift_vector: generator log-moduli do not positively span");
      return *it->second;
    }
  }
  const LogTable tab(g);
  const std::size_t G = tab.gens;
  const std::size_t n = tab.n;
  auto norm_of = [&](const std::vector<std::uint64_t>& c) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t a = 0; a < G; ++a) v += static_cast<double>(c[a]) * tab.logmod(a, i);
      ss += v * v;
    }
    return std::sqrt(ss);
  };
  std::optional<ExponentVector> found;
  // Box tiers: vectors with max entry s, first coordinate varying fastest.
  for (std::uint64_t tier = 1; tier <= 50 && !found; ++tier) {
    std::vector<std::uint64_t> c(G, 0);
    std::uint64_t enumerated = 0;
    for (;;) {
      if (*std::max_element(c.begin(), c.end()) == tier) {
        if (++enumerated > 10000) break;
        if (norm_of(c) <= 0.1) {
          found = ExponentVector{c};
          break;
        }
      }
      std::size_t k = 0;
      while (k < G && c[k] == tier) c[k++] = 0;
      if (k == G) break;
      ++c[k];
    }
  }
  // Fallback: fiber search on c0 with the rest rounded.
  if (!found && G > 1) {
    const std::size_t K = G - 1;
    Eigen::MatrixXd v(n, K);
    Eigen::VectorXd v0(n);
    for (std::size_t i = 0; i < n; ++i) {
      v0(i) = tab.logmod(0, i);
      for (std::size_t a = 0; a < K; ++a) v(i, a) = tab.logmod(a + 1, i);
    }
    const Eigen::VectorXd dx = pinv(v) * v0;
    const bool dither = K <= 6;
    std::uint64_t combos = 1;
    if (dither)
      for (std::size_t a = 0; a < K; ++a) combos *= 3;
    for (std::uint64_t c0 = 1; c0 <= 100000 && !found; ++c0) {
      for (std::uint64_t code = 0; code < combos && !found; ++code) {
        std::vector<std::uint64_t> c(G, 0);
        c[0] = c0;
        std::uint64_t rest = code;
        bool ok = true;
        for (std::size_t a = 0; a < K; ++a) {
          const int off = dither ? static_cast<int>(rest % 3) - 1 : 0;
          rest /= 3;
          const double xa = std::round(-static_cast<double>(c0) * dx(static_cast<Eigen::Index>(a))) + off;
          if (xa < 0) {
            ok = false;
            break;
          }
          c[a + 1] = static_cast<std::uint64_t>(xa);
        }
        if (ok && norm_of(c) <= 0.1) found = ExponentVector{c};
      }
    }
  }
  {
    std::lock_guard lock(drift_mutex());
    drift_cache()[key] = found;
  }
  if (!found) throw SpanningFailure("drift_vector: no nonnegative combination with norm <= 0.1 was found");
  return *found;
}

}  // namespace trisemi
