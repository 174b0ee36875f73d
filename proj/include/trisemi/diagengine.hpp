#pragma once

// Approximating diagonal targets by products of the generators' diagonal parts.
//
// A candidate is an exponent vector m (one entry per generator, m[0] for A).
// Its diagonal is prod_alpha diag(g_alpha)^m_alpha, handled throughout in
// log-modulus / phase coordinates so that exponents far beyond the double
// range of the individual powers are harmless.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "trisemi/genset.hpp"

namespace trisemi {

/// Diagonal target in log coordinates.
///
/// `phase` holds sign bits (0 = positive, 1 = negative) in the real field and
/// arguments in [0, 2 pi) in the complex field.  `weight` scales each
/// coordinate's contribution to the error: |B_ii| gives the sup-norm distance,
/// 1 gives the relative distance, 0 leaves the coordinate free.
struct DiagTarget {
  FieldTag field = FieldTag::real;
  std::vector<double> logmag;
  std::vector<double> phase;
  std::vector<double> weight;

  std::size_t dim() const { return logmag.size(); }
  /// B_ii recomputed from the log coordinates.
  Scalar value(std::size_t i) const;
};

/// Sup-norm target for a diagonal matrix with nonzero diagonal.
DiagTarget diag_log_target(const Matrix& b);
/// Same coordinates from an explicit diagonal; unit weights (relative metric).
DiagTarget diag_log_target_relative(std::span<const Scalar> d, FieldTag field);
/// Target for X with X * diag(base)^power = B, i.e. B / base^power.
DiagTarget shift_target(DiagTarget t, std::span<const Scalar> base, double power);

struct ExponentVector {
  std::vector<std::uint64_t> m;
  friend bool operator==(const ExponentVector&, const ExponentVector&) = default;
  friend auto operator<=>(const ExponentVector&, const ExponentVector&) = default;
};

enum class DiagMode { exhaustive, heuristic };

/// What a candidate is scored on.
///
/// `sup`: max_i weight_i |beta_i / b_i - 1|; zero-weight coordinates must stay
/// within `window` of their target log-modulus.
/// `ratio`: |(beta_r / beta_s) / (b_r / b_s) - 1|, with every coordinate's
/// log-modulus kept within `window` of its target (candidates outside score +inf).
struct DiagObjective {
  enum class Kind { sup, ratio };
  Kind kind = Kind::sup;
  std::size_t r = 0;  // 0-based coordinates for the ratio objective
  std::size_t s = 0;
  double window = std::numeric_limits<double>::infinity();
};

struct DiagSolveConfig {
  double tol = 0.05;
  std::uint64_t budget = 1'000'000;
  std::uint64_t box = std::numeric_limits<std::uint32_t>::max();
  std::uint64_t min_m0 = 0;
  DiagMode mode = DiagMode::heuristic;
  DiagObjective objective{};
};

struct DiagSolveResult {
  ExponentVector exps;
  double error = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::uint64_t nodes = 0;
};

/// Error of one exponent vector under the configured objective (+inf when a
/// weighted coordinate has the wrong sign in the real field).
double diag_candidate_error(const GeneratorSet& g, const ExponentVector& m, const DiagTarget& t,
                            const DiagObjective& obj = {});

/// Diagonal of the word prod D_alpha^m_alpha * A^m0 (diagonal parts only).
std::vector<Scalar> diag_candidate_value(const GeneratorSet& g, const ExponentVector& m);

DiagSolveResult diag_solve_exhaustive(const GeneratorSet& g, const DiagTarget& t, const DiagSolveConfig& cfg);
DiagSolveResult diag_solve_heuristic(const GeneratorSet& g, const DiagTarget& t, const DiagSolveConfig& cfg);
/// Dispatches on cfg.mode.
DiagSolveResult diag_solve(const GeneratorSet& g, const DiagTarget& t, const DiagSolveConfig& cfg);

/// Nonzero c >= 0 with || sum_alpha c_alpha v_alpha ||_2 <= 0.1, v_alpha the
/// generators' log-modulus vectors.  Cached per generator set.
ExponentVector drift_vector(const GeneratorSet& g);

/// The word D_1^m_1 ... D_k^m_k A^m_0 (zero exponents skipped).
Word exponent_word(const ExponentVector& m);

/// Worker count from TRISEMI_THREADS (0 or unset = hardware concurrency).
unsigned worker_threads();

}  // namespace trisemi
