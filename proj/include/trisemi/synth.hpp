#pragma once

// Word synthesis: the entry-elimination cascade, diagonal closures and the
// recursive block factorization for lower-triangular targets.

#include <cstdint>
#include <limits>
#include <vector>

#include "trisemi/diagengine.hpp"
#include "trisemi/genset.hpp"
#include "trisemi/ordering.hpp"

namespace trisemi {

/// One step of the cascade.  `word_for_A` evaluates to a matrix whose entries
/// strictly preceding `anchor` are (numerically) zero; `residual` is that
/// evaluation minus D0.
struct EliminationState {
  IndexPair anchor{2, 1};
  bool finished = false;
  Word word_for_A;
  Matrix residual;
  bool converged = true;
  std::uint64_t nodes = 0;
};

/// Starting state: anchor (2,1), word [(0,1)].  Finished at once for n = 1.
EliminationState initial_state(const GeneratorSet& g);

struct FactorParts {
  Matrix R;
  Scalar x;
  Matrix S;
};

struct SynthStats {
  std::uint64_t nodes = 0;
  unsigned retries = 0;
  double wall_ms = 0.0;
  std::size_t word_length = 0;
  /// A-posteriori bound from the measured stage errors (+inf when not computed).
  double error_bound = std::numeric_limits<double>::infinity();
};

struct ApproxReport {
  Matrix target;
  Word word;
  double achieved_error = std::numeric_limits<double>::infinity();
  bool converged = false;
  SynthStats stats;
};

struct EtaResult {
  Word word;
  bool converged = false;
  std::uint64_t nodes = 0;
  /// Exponent of the state's matrix inside the word (m0 when the state word is A).
  std::uint64_t power = 0;
  double solver_error = std::numeric_limits<double>::infinity();
};

/// Word whose evaluation M has diag(M) ~ B (sup objective, cfg.tol) and
/// M ~ diag(M) * S(W)^-1 up to delta, W the state's matrix.
EtaResult eta_word(const GeneratorSet& g, const EliminationState& state, const Matrix& b, double delta,
                   const DiagSolveConfig& cfg);

/// Limit value diag(b) * S(W)^-1 for W = D + T with increasing moduli; its
/// (r,s) entry is b_r W_rs / (w_r - w_s) when W - D vanishes before (r,s).
Matrix eta_ideal(const Matrix& w, std::span<const Scalar> b);

/// Clears the anchor entry.  cfg.tol is the relative accuracy of the new
/// diagonal against D0, delta the target size of the cleared entry.
EliminationState eliminate_entry(const GeneratorSet& g, const EliminationState& state, double delta,
                                 const DiagSolveConfig& cfg);

/// Every state from (2,1) to the finished one.
std::vector<EliminationState> elimination_cascade(const GeneratorSet& g, double delta, const DiagSolveConfig& cfg);

/// Word approximating a diagonal target of dimension m <= n.
ApproxReport diag_closure_word(const GeneratorSet& g, const Matrix& b, double eps, std::uint64_t budget);

/// [R 0; 0 x] * A * [S 0; 0 1] = B.
FactorParts factor_target(const Matrix& b, const Matrix& a);

/// B' within delta of B with z != 0, W free of zeros and U's diagonal nonzero
/// with distinct moduli.
Matrix perturb_generic(const Matrix& b, double delta, std::uint64_t seed);

/// Word approximating a lower-triangular target of dimension m <= n.
ApproxReport approx_triangular(const GeneratorSet& g, const Matrix& b, double eps, std::uint64_t budget,
                               std::uint64_t seed = 0);

/// sup_norm(eval_word(g, w, m) - b), +inf if the evaluation overflows.
double word_error(const GeneratorSet& g, const Word& w, const Matrix& b);

}  // namespace trisemi
