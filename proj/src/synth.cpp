#include "trisemi/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>

namespace trisemi {

namespace {

// Cascade parameters used by the diagonal closures.
constexpr double kCascadeDelta = 1e-5;
constexpr double kCascadeTol = 0.05;
constexpr std::uint64_t kCascadeBudget = 100'000'000;
// Initial share of the remaining tolerance handed to each stage.
constexpr double kStageShare = 0.5;
constexpr int kMaxRetries = 3;
constexpr double kDegenerateFloor = 1e-8;

double wrap_angle(double x) {
  double r = std::fmod(x, 2.0 * std::numbers::pi);
  if (r < 0) r += 2.0 * std::numbers::pi;
  return r;
}

// Log-modulus and phase of the diagonal of an evaluated word.
DiagTarget word_diag_log(const GeneratorSet& g, const Word& w) {
  const auto tot = w.totals(g.count());
  DiagTarget t;
  t.field = g.field;
  t.logmag.assign(g.n, 0.0);
  t.phase.assign(g.n, 0.0);
  t.weight.assign(g.n, 1.0);
  std::vector<long double> ph(g.n, 0.0L);
  for (std::size_t a = 0; a < g.count(); ++a) {
    if (tot[a] == 0) continue;
    const auto d = g.generator_diag(a);
    for (std::size_t i = 0; i < g.n; ++i) {
      t.logmag[i] += static_cast<double>(tot[a]) * std::log(std::abs(d[i]));
      if (g.field == FieldTag::real) {
        if (d[i].real() < 0.0 && (tot[a] & 1U)) t.phase[i] = 1.0 - t.phase[i];
      } else {
        ph[i] += static_cast<long double>(tot[a]) * static_cast<long double>(std::arg(d[i]));
      }
    }
  }
  if (g.field == FieldTag::complex)
    for (std::size_t i = 0; i < g.n; ++i)
      t.phase[i] = wrap_angle(static_cast<double>(std::fmod(ph[i], 2.0L * std::numbers::pi_v<long double>)));
  return t;
}

// Widest single-step log change of any generator, plus one.
double free_window(const GeneratorSet& g) {
  double w = 0.0;
  for (std::size_t a = 0; a < g.count(); ++a)
    for (const auto& d : g.generator_diag(a)) w = std::max(w, std::abs(std::log(std::abs(d))));
  return 1.0 + w;
}

struct StateInfo {
  Matrix w;
  std::vector<Scalar> alpha;
  Matrix p;  // S(W)^-1, the normalised limit of W^k
  double lambda = 1.0;
  double rho = 0.0;
  bool is_generator = false;
};

StateInfo state_info(const GeneratorSet& g, const EliminationState& st) {
  StateInfo s;
  s.is_generator = st.word_for_A.length() == 1 && st.word_for_A.factors[0] == Factor{0, 1};
  s.w = eval_word(g, st.word_for_A);
  s.alpha = s.w.diag();
  s.p = tri_eigendecompose(s.w).S_inv;
  s.lambda = lambda_bound(s.w);
  if (!s.is_generator) s.lambda = std::max(s.lambda, lambda_bound(g.generator(0)));
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t m = 0; m < i; ++m) s.rho = std::max(s.rho, std::abs(s.alpha[m]) / std::abs(s.alpha[i]));
  if (!(s.rho < 1.0)) throw IllConditioned("elimination state: diagonal moduli are not increasing");
  return s;
}

std::uint64_t min_power(double delta, double lambda, double rho, double scale) {
  if (rho <= 0.0) return 1;
  const double k = std::ceil(std::log(delta / (lambda * std::max(1.0, scale))) / std::log(rho));
  return k < 1.0 ? 1 : static_cast<std::uint64_t>(k);
}

// Diagonal word times a power of the state's matrix: D^m A^j W^k, the W power
// fixed large enough that every row is dominated by its diagonal eigenvalue.
EtaResult eta_solve(const GeneratorSet& g, const StateInfo& info, const Word& state_word, const DiagTarget& t,
                    const DiagObjective& obj, double tol, double delta, std::uint64_t budget) {
  double scale = 0.0;
  for (std::size_t i = 0; i < t.dim(); ++i) {
    const bool loose = obj.kind == DiagObjective::Kind::ratio || t.weight[i] == 0.0;
    const double slack = loose ? std::min(obj.window, 50.0) : 0.0;
    scale = std::max(scale, std::exp(t.logmag[i] + slack));
  }
  const std::uint64_t k = min_power(delta, info.lambda, info.rho, scale);
  DiagSolveConfig cfg;
  cfg.tol = tol;
  cfg.budget = budget;
  cfg.objective = obj;
  EtaResult out;
  try {
    if (info.is_generator) {
      cfg.min_m0 = k;
      const auto r = diag_solve(g, t, cfg);
      out.word = exponent_word(r.exps);
      out.power = r.exps.m[0];
      out.converged = r.converged;
      out.nodes = r.nodes;
      out.solver_error = r.error;
    } else {
      const auto r = diag_solve(g, shift_target(t, info.alpha, static_cast<double>(k)), cfg);
      out.word = exponent_word(r.exps);
      out.word.append(repeat(state_word, k));
      out.power = k;
      out.converged = r.converged;
      out.nodes = r.nodes;
      out.solver_error = r.error;
    }
  } catch (const Infeasible&) {
    out = EtaResult{};
  }
  return out;
}

// M1 M2 with (M2)_rr = -(M2)_ss, so the anchor entry of the product cancels,
// and diag(M1 M2) ~ c.  Coordinates with zero weight in `c` are only kept
// within the window.
EtaResult double_eta(const GeneratorSet& g, const StateInfo& info, const Word& state_word, std::size_t r,
                     std::size_t s, const DiagTarget& c, double rel_tol, double off_tol, std::uint64_t budget) {
  const double window = free_window(g);
  double cmax = 1.0;
  for (std::size_t i = 0; i < c.dim(); ++i)
    if (c.weight[i] != 0.0) cmax = std::max(cmax, std::exp(c.logmag[i]));
  const double delta = off_tol / (4.0 * cmax);
  const DiagObjective sup{DiagObjective::Kind::sup, 0, 0, window};
  const double p = std::abs(info.p(r, s));
  if (p < 1e-300) return eta_solve(g, info, state_word, c, sup, rel_tol, delta, budget);

  const double cr = std::exp(c.logmag[r]);
  const double ratio_tol = std::clamp(off_tol / (2.0 * cr * p), 1e-13, 0.5);
  DiagTarget t2;
  t2.field = g.field;
  t2.logmag.assign(g.n, 0.0);
  t2.phase.assign(g.n, 0.0);
  t2.weight.assign(g.n, 0.0);
  t2.phase[r] = g.field == FieldTag::real ? 1.0 : std::numbers::pi;
  t2.weight[r] = 1.0;
  t2.weight[s] = 1.0;
  const DiagObjective ratio{DiagObjective::Kind::ratio, r, s, window};
  EtaResult e2 = eta_solve(g, info, state_word, t2, ratio, ratio_tol, delta, budget);
  if (e2.word.empty()) return e2;

  const DiagTarget d2 = word_diag_log(g, e2.word);
  DiagTarget t1 = c;
  for (std::size_t i = 0; i < g.n; ++i) {
    t1.logmag[i] = c.logmag[i] - d2.logmag[i];
    if (g.field == FieldTag::real)
      t1.phase[i] = c.phase[i] != d2.phase[i] ? 1.0 : 0.0;
    else
      t1.phase[i] = wrap_angle(c.phase[i] - d2.phase[i]);
  }
  EtaResult e1 = eta_solve(g, info, state_word, t1, sup, rel_tol, delta, budget);
  EtaResult out;
  out.nodes = e1.nodes + e2.nodes;
  out.converged = e1.converged && e2.converged;
  out.solver_error = std::max(e1.solver_error, e2.solver_error);
  if (e1.word.empty()) return out;
  out.word = concat(e1.word, e2.word);
  out.power = e1.power;
  return out;
}

// Cascade cache ---------------------------------------------------------------

struct CascadeEntry {
  EliminationState state;
  std::optional<StateInfo> info;
};

std::mutex& cascade_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::vector<CascadeEntry>>& cascade_cache() {
  static std::map<std::string, std::vector<CascadeEntry>> c;
  return c;
}

// State (and its evaluated data) at `anchor` of the shared cascade.
std::pair<EliminationState, StateInfo> cascade_state(const GeneratorSet& g, const IndexPair& anchor) {
  std::lock_guard lock(cascade_mutex());
  auto& entries = cascade_cache()[generators_to_json(g)];
  if (entries.empty()) entries.push_back({initial_state(g), std::nullopt});
  DiagSolveConfig cfg;
  cfg.tol = kCascadeTol;
  cfg.budget = kCascadeBudget;
  for (std::size_t i = 0;; ++i) {
    if (i == entries.size()) {
      const auto& prev = entries.back().state;
      if (prev.finished) break;
      entries.push_back({eliminate_entry(g, prev, kCascadeDelta, cfg), std::nullopt});
    }
    auto& e = entries[i];
    if (!e.state.finished && e.state.anchor == anchor) {
      if (!e.info) e.info = state_info(g, e.state);
      return {e.state, *e.info};
    }
    if (e.state.finished) break;
  }
  throw InvalidInput("cascade: anchor (" + std::to_string(anchor.r) + "," + std::to_string(anchor.s) +
                     ") is not on the elimination path");
}

DiagTarget full_target(const GeneratorSet& g, std::span<const Scalar> c) {
  std::vector<Scalar> vals(g.n, Scalar{1.0});
  std::copy(c.begin(), c.end(), vals.begin());
  DiagTarget t = diag_log_target_relative(vals, g.field);
  for (std::size_t i = c.size(); i < g.n; ++i) t.weight[i] = 0.0;
  return t;
}

// Word for diag(c) (dimension m = c.size()): relative accuracy rel_tol on the
// diagonal, anchor entry below rel_tol * max(|c_r|, |c_s|).
EtaResult closure_internal(const GeneratorSet& g, std::span<const Scalar> c, double rel_tol, std::uint64_t budget) {
  const std::size_t m = c.size();
  const DiagTarget t = full_target(g, c);
  if (m == 1 || g.n == 1) {
    DiagSolveConfig cfg;
    cfg.tol = rel_tol;
    cfg.budget = budget;
    cfg.min_m0 = 1;
    cfg.objective = DiagObjective{DiagObjective::Kind::sup, 0, 0, free_window(g)};
    EtaResult out;
    try {
      const auto r = diag_solve(g, t, cfg);
      out.word = exponent_word(r.exps);
      out.converged = r.converged;
      out.nodes = r.nodes;
      out.solver_error = r.error;
      out.power = r.exps.m[0];
    } catch (const Infeasible&) {
    }
    return out;
  }
  const auto [st, info] = cascade_state(g, IndexPair{static_cast<int>(m), 1});
  const double off_tol = rel_tol * std::max(std::abs(c[m - 1]), std::abs(c[0]));
  return double_eta(g, info, st.word_for_A, m - 1, 0, t, rel_tol, off_tol, budget);
}

std::optional<Word> generator_match(const GeneratorSet& g, const Matrix& b) {
  for (std::size_t id = 0; id < g.count(); ++id)
    if (g.generator(id).block(b.dim()) == b) return Word{{Factor{id, 1}}};
  return std::nullopt;
}

void check_target_matrix(const GeneratorSet& g, const Matrix& b) {
  if (b.dim() < 1 || b.dim() > g.n)
    throw InvalidInput("target dimension " + std::to_string(b.dim()) + " is outside 1.." + std::to_string(g.n));
  if (b.field() != g.field && g.field == FieldTag::real)
    throw InvalidInput("complex target for a real generator set");
  for (std::size_t i = 0; i < b.dim(); ++i)
    for (std::size_t j = i + 1; j < b.dim(); ++j)
      if (b(i, j) != Scalar{})
        throw InvalidInput("target is not lower triangular: entry (" + std::to_string(i + 1) + "," +
                           std::to_string(j + 1) + ") is nonzero");
}

Matrix as_field(const Matrix& b, FieldTag f) {
  if (b.field() == f) return b;
  Matrix out(b.dim(), f);
  for (std::size_t i = 0; i < b.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) out(i, j) = b(i, j);
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------

double word_error(const GeneratorSet& g, const Word& w, const Matrix& b) {
  try {
    return sup_norm(eval_word(g, w, b.dim()) - b);
  } catch (const OverflowError&) {
    return std::numeric_limits<double>::infinity();
  }
}

EliminationState initial_state(const GeneratorSet& g) {
  EliminationState st;
  st.word_for_A = Word{{Factor{0, 1}}};
  st.residual = g.t;
  st.finished = g.n < 2;
  return st;
}

EtaResult eta_word(const GeneratorSet& g, const EliminationState& state, const Matrix& b, double delta,
                   const DiagSolveConfig& cfg) {
  if (state.finished) throw InvalidInput("eta_word: cascade already finished");
  if (b.dim() != g.n) throw InvalidInput("eta_word: target dimension differs from the generator set");
  if (!(delta > 0.0)) throw InvalidInput("eta_word: delta must be positive");
  const StateInfo info = state_info(g, state);
  DiagObjective obj = cfg.objective;
  return eta_solve(g, info, state.word_for_A, diag_log_target(as_field(b, g.field)), obj, cfg.tol, delta,
                   cfg.budget);
}

Matrix eta_ideal(const Matrix& w, std::span<const Scalar> b) {
  if (b.size() != w.dim()) throw InvalidInput("eta_ideal: dimension mismatch");
  return mat_mul(Matrix::diagonal(b, w.field()), tri_eigendecompose(w).S_inv);
}

EliminationState eliminate_entry(const GeneratorSet& g, const EliminationState& state, double delta,
                                 const DiagSolveConfig& cfg) {
  if (state.finished) throw InvalidInput("eliminate_entry: cascade already finished");
  if (!(delta > 0.0)) throw InvalidInput("eliminate_entry: delta must be positive");
  const StateInfo info = state_info(g, state);
  const auto r = static_cast<std::size_t>(state.anchor.r - 1);
  const auto s = static_cast<std::size_t>(state.anchor.s - 1);
  const DiagTarget c = diag_log_target_relative(g.a, g.field);
  const EtaResult e = double_eta(g, info, state.word_for_A, r, s, c, cfg.tol, delta, cfg.budget);

  EliminationState next;
  next.nodes = state.nodes + e.nodes;
  next.converged = state.converged && e.converged;
  if (e.word.empty()) {
    next = state;
    next.converged = false;
    next.nodes = state.nodes + e.nodes;
    return next;
  }
  next.word_for_A = e.word;
  try {
    next.residual = eval_word(g, e.word) - g.d0();
  } catch (const OverflowError&) {
    next = state;
    next.converged = false;
    return next;
  }
  const auto succ = delta_successor(state.anchor, g.n);
  if (succ)
    next.anchor = *succ;
  else
    next.finished = true, next.anchor = state.anchor;
  return next;
}

std::vector<EliminationState> elimination_cascade(const GeneratorSet& g, double delta, const DiagSolveConfig& cfg) {
  std::vector<EliminationState> out{initial_state(g)};
  while (!out.back().finished && out.back().converged) out.push_back(eliminate_entry(g, out.back(), delta, cfg));
  return out;
}

ApproxReport diag_closure_word(const GeneratorSet& g, const Matrix& b_in, double eps, std::uint64_t budget) {
  const auto t0 = std::chrono::steady_clock::now();
  check_target_matrix(g, b_in);
  if (!b_in.is_diagonal()) throw InvalidInput("diag target is not diagonal");
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  const Matrix b = as_field(b_in, g.field);
  const auto d = b.diag();
  double bmax = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == Scalar{}) throw InvalidInput("diag target has a zero entry at position " + std::to_string(i + 1));
    bmax = std::max(bmax, std::abs(d[i]));
  }
  ApproxReport rep;
  rep.target = b;
  if (auto w = generator_match(g, b)) {
    rep.word = *w;
  } else {
    double rel = std::min(0.5, eps / (2.0 * bmax));
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
      if (attempt > 0) ++rep.stats.retries;
      const EtaResult r = closure_internal(g, d, rel, budget);
      rep.stats.nodes += r.nodes;
      if (!r.word.empty()) {
        const double err = word_error(g, r.word, b);
        if (rep.word.empty() || err < rep.achieved_error) {
          rep.word = r.word;
          rep.achieved_error = err;
        }
      }
      if (rep.achieved_error <= eps) break;
      rel /= 2.0;
    }
  }
  rep.achieved_error = rep.word.empty() ? std::numeric_limits<double>::infinity() : word_error(g, rep.word, b);
  rep.converged = rep.achieved_error <= eps;
  rep.stats.word_length = rep.word.length();
  rep.stats.wall_ms = elapsed_ms(t0);
  return rep;
}

FactorParts factor_target(const Matrix& b, const Matrix& a) {
  const std::size_t m = b.dim();
  if (m < 2 || a.dim() != m) throw InvalidInput("factor_target: need matching dimensions >= 2");
  if (!b.is_lower_triangular() || !a.is_lower_triangular())
    throw InvalidInput("factor_target: matrices must be lower triangular");
  const Scalar z = b(m - 1, m - 1);
  if (z == Scalar{}) throw GenericityViolation("factor_target: corner entry z is zero");
  for (std::size_t j = 0; j + 1 < m; ++j) {
    if (b(m - 1, j) == Scalar{})
      throw GenericityViolation("factor_target: last-row entry (" + std::to_string(m) + "," + std::to_string(j + 1) +
                                ") is zero");
    if (b(j, j) == Scalar{}) throw GenericityViolation("factor_target: leading block is singular");
    if (a(m - 1, j) == Scalar{}) throw PreconditionViolation("factor_target: generator has a zero last-row entry");
  }
  const Scalar an = a(m - 1, m - 1);
  if (an == Scalar{}) throw PreconditionViolation("factor_target: generator has a zero corner");
  FactorParts f;
  f.x = z / an;
  std::vector<Scalar> sd(m - 1);
  std::vector<Scalar> sinv(m - 1);
  for (std::size_t j = 0; j + 1 < m; ++j) {
    sd[j] = b(m - 1, j) / (f.x * a(m - 1, j));
    sinv[j] = Scalar{1.0} / sd[j];
  }
  const FieldTag field = (b.field() == FieldTag::complex || a.field() == FieldTag::complex) ? FieldTag::complex
                                                                                              : FieldTag::real;
  f.S = Matrix::diagonal(sd, field);
  const Matrix u = as_field(b.block(m - 1), field);
  f.R = mat_mul(mat_mul(u, Matrix::diagonal(sinv, field)), tri_inverse(as_field(a.block(m - 1), field)));
  return f;
}

Matrix perturb_generic(const Matrix& b, double delta, std::uint64_t seed) {
  if (!b.is_lower_triangular()) throw InvalidInput("perturb_generic: matrix is not lower triangular");
  if (!(delta > 0.0)) throw InvalidInput("perturb_generic: delta must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool complex = b.field() == FieldTag::complex;
  Matrix out = b;
  const std::size_t m = b.dim();
  const double floor = delta / 4.0;
  auto lift = [&](Scalar& x) {
    const double u = unit(rng);
    const double v = unit(rng);
    if (std::abs(x) >= floor) return;
    const double mag = floor * (1.0 + u);
    if (x != Scalar{})
      x *= mag / std::abs(x);
    else if (complex)
      x = std::polar(mag, 2.0 * std::numbers::pi * v);
    else
      x = Scalar(v < 0.5 ? -mag : mag);
  };
  for (std::size_t j = 0; j + 1 < m; ++j) lift(out(m - 1, j));
  lift(out(m - 1, m - 1));
  for (std::size_t i = 0; i + 1 < m; ++i) lift(out(i, i));
  // Distinct moduli on the leading diagonal.
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double u = unit(rng);
    for (std::size_t k = 0; k < i; ++k) {
      const double ri = std::abs(out(i, i));
      if (std::abs(ri - std::abs(out(k, k))) <= 1e-12 * ri) {
        const double t = std::min(0.5, floor / ri) * (0.5 + 0.5 * u);
        out(i, i) *= 1.0 + t;
      }
    }
  }
  return out;
}

namespace {

struct RecCtx {
  const GeneratorSet& g;
  std::uint64_t budget;
  std::uint64_t nodes = 0;
  unsigned retries = 0;
};

struct RecResult {
  Word word;
  double error = std::numeric_limits<double>::infinity();
  double bound = std::numeric_limits<double>::infinity();
};

// Bound on |prod(hat) - prod(ideal)| by telescoping, with the m^(k-1) factor
// of the sup norm under multiplication.
double telescoping_bound(const std::vector<Matrix>& hat, const std::vector<Matrix>& ideal) {
  const std::size_t m = hat.front().dim();
  const double c = std::pow(static_cast<double>(m), static_cast<double>(hat.size() - 1));
  double total = 0.0;
  for (std::size_t k = 0; k < hat.size(); ++k) {
    double term = sup_norm(hat[k] - ideal[k]);
    for (std::size_t j = 0; j < k; ++j) term *= sup_norm(hat[j]);
    for (std::size_t j = k + 1; j < hat.size(); ++j) term *= sup_norm(ideal[j]);
    total += term;
  }
  return c * total;
}

RecResult approx_rec(RecCtx& cx, const Matrix& b, double eps, std::uint64_t seed) {
  const GeneratorSet& g = cx.g;
  const std::size_t m = b.dim();
  RecResult best;
  if (auto w = generator_match(g, b)) {
    best.word = *w;
    best.error = best.bound = 0.0;
    return best;
  }
  const Matrix a_m = g.generator(0).block(m);
  double share = kStageShare;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    if (attempt > 0) ++cx.retries;
    const Matrix bp = perturb_generic(b, eps / 4.0, seed * 1000003ULL + static_cast<std::uint64_t>(attempt));
    const double pert = sup_norm(bp - b);
    const double rem = eps - pert;
    RecResult cur;
    if (m == 1) {
      const Scalar c = bp(0, 0);
      const double rel = std::min(0.5, share * 2.0 * rem / std::abs(c));
      const EtaResult r = closure_internal(g, std::span<const Scalar>(&c, 1), rel, cx.budget);
      cx.nodes += r.nodes;
      if (r.word.empty()) {
        share /= 2.0;
        continue;
      }
      cur.word = r.word;
      cur.bound = pert + word_error(g, r.word, bp);
    } else {
      const FactorParts parts = factor_target(bp, a_m);
      const double norm_as = static_cast<double>(m) * sup_norm(a_m) * std::max(1.0, sup_norm(parts.S));
      const RecResult sub = approx_rec(cx, parts.R, share * rem / norm_as, seed * 31ULL + static_cast<std::uint64_t>(attempt) + 1);
      if (sub.word.empty()) {
        share /= 2.0;
        continue;
      }
      Matrix l;
      try {
        l = eval_word(g, sub.word, m);
      } catch (const OverflowError&) {
        share /= 2.0;
        continue;
      }
      const Scalar xt = l(m - 1, m - 1);
      if (std::abs(xt) < kDegenerateFloor) continue;
      double vnorm = 0.0;
      for (std::size_t j = 0; j + 1 < m; ++j) vnorm = std::max(vnorm, std::abs(l(m - 1, j)));
      const double eps_v = share * rem / norm_as;
      const double a = eps_v / (1.0 + vnorm);
      const double rel = std::min(0.5, share * rem / (static_cast<double>(m) * std::max(1.0, sup_norm(bp))));

      std::vector<Scalar> cl(m, Scalar{1.0});
      std::vector<Scalar> cr(m, Scalar{1.0});
      std::vector<Scalar> cs(m, Scalar{1.0});
      cl[m - 1] = a;
      cr[m - 1] = parts.x / (a * xt);
      for (std::size_t j = 0; j + 1 < m; ++j) cs[j] = parts.S(j, j);

      const EtaResult left = closure_internal(g, cl, rel, cx.budget);
      const EtaResult right = closure_internal(g, cr, rel, cx.budget);
      const EtaResult sblk = closure_internal(g, cs, rel, cx.budget);
      cx.nodes += left.nodes + right.nodes + sblk.nodes;
      if (left.word.empty() || right.word.empty() || sblk.word.empty()) {
        share /= 2.0;
        continue;
      }
      cur.word = left.word;
      cur.word.append(sub.word);
      cur.word.append(right.word);
      cur.word.append(Factor{0, 1});
      cur.word.append(sblk.word);

      try {
        std::vector<Matrix> hat{eval_word(g, left.word, m), l, eval_word(g, right.word, m), a_m,
                                eval_word(g, sblk.word, m)};
        Matrix l_ideal = l;
        for (std::size_t i = 0; i + 1 < m; ++i)
          for (std::size_t j = 0; j <= i; ++j) l_ideal(i, j) = parts.R(i, j);
        std::vector<Matrix> ideal{Matrix::diagonal(cl, g.field), l_ideal, Matrix::diagonal(cr, g.field), a_m,
                                  Matrix::diagonal(cs, g.field)};
        // The ideal product differs from B' by the a*V row.
        Matrix av(m, g.field);
        for (std::size_t j = 0; j + 1 < m; ++j) av(m - 1, j) = a * l(m - 1, j);
        const Matrix leak = mat_mul(mat_mul(av, a_m), Matrix::diagonal(cs, g.field));
        cur.bound = pert + sup_norm(leak) + telescoping_bound(hat, ideal);
      } catch (const OverflowError&) {
        cur.bound = std::numeric_limits<double>::infinity();
      }
    }
    cur.error = word_error(g, cur.word, b);
    if (best.word.empty() || cur.error < best.error) best = cur;
    if (best.error <= eps) break;
    share /= 2.0;
  }
  return best;
}

// Short words D^m A^m0 and A^m0 D^m from a small exhaustive box over the
// diagonal of B; catches targets that are themselves short generator products.
RecResult direct_search(RecCtx& cx, const Matrix& b, double eps) {
  RecResult best;
  const GeneratorSet& g = cx.g;
  const std::size_t m = b.dim();
  const std::uint64_t cap = std::min<std::uint64_t>(cx.budget, 200'000);
  std::uint64_t box = 0;
  while (box < 6 && std::pow(static_cast<double>(box + 2), static_cast<double>(g.count())) <= static_cast<double>(cap))
    ++box;
  if (box == 0) return best;
  std::vector<Scalar> d(g.n, Scalar{1.0});
  for (std::size_t i = 0; i < m; ++i) {
    if (b(i, i) == Scalar{}) return best;
    d[i] = b(i, i);
  }
  DiagTarget t = diag_log_target_relative(d, g.field);
  for (std::size_t i = 0; i < g.n; ++i) t.weight[i] = i < m ? std::abs(d[i]) : 0.0;
  DiagSolveConfig cfg;
  cfg.tol = eps;
  cfg.budget = cap;
  cfg.box = box;
  cfg.mode = DiagMode::exhaustive;
  DiagSolveResult r;
  try {
    r = diag_solve_exhaustive(g, t, cfg);
  } catch (const Error&) {
    return best;
  }
  cx.nodes += r.nodes;
  const Word fwd = exponent_word(r.exps);
  if (fwd.empty()) return best;
  Word rev;
  for (auto it = fwd.factors.rbegin(); it != fwd.factors.rend(); ++it) rev.append(*it);
  for (const Word& w : {fwd, rev}) {
    const double e = word_error(g, w, b);
    if (e < best.error) {
      best.word = w;
      best.error = best.bound = e;
    }
  }
  return best;
}

}  // namespace

ApproxReport approx_triangular(const GeneratorSet& g, const Matrix& b_in, double eps, std::uint64_t budget,
                               std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  check_target_matrix(g, b_in);
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  if (budget < 1) throw InvalidInput("budget must be at least 1");
  const Matrix b = as_field(b_in, g.field);
  RecCtx cx{g, budget};
  RecResult r = direct_search(cx, b, eps);
  if (!(r.error <= eps)) {
    RecResult built = approx_rec(cx, b, eps, seed);
    if (r.word.empty() || built.error < r.error) r = std::move(built);
  }
  ApproxReport rep;
  rep.target = b;
  rep.word = r.word;
  rep.achieved_error = r.word.empty() ? std::numeric_limits<double>::infinity() : word_error(g, r.word, b);
  rep.converged = rep.achieved_error <= eps;
  rep.stats.nodes = cx.nodes;
  rep.stats.retries = cx.retries;
  rep.stats.word_length = rep.word.length();
  rep.stats.error_bound = r.bound;
  rep.stats.wall_ms = elapsed_ms(t0);
  return rep;
}

}  // namespace trisemi
