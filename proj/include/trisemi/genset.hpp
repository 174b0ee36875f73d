#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trisemi/matcore.hpp"

namespace trisemi {

/// The generator family {A = D0 + T, D_1, ..., D_k}.  Generator 0 is A.
///
/// `d_gens` normally holds n diagonal matrices; after sigma_reduce it keeps
/// every truncated D_j, so it may be longer than `n`.
struct GeneratorSet {
  std::size_t n = 0;
  FieldTag field = FieldTag::real;
  std::vector<Scalar> a;       // diagonal of D0
  Matrix t;                    // strictly lower perturbation
  std::vector<Matrix> d_gens;  // D_1 .. D_k

  std::size_t count() const { return d_gens.size() + 1; }
  /// Generator `id` as an n x n matrix (0 is A = D0 + T).
  Matrix generator(std::size_t id) const;
  Matrix d0() const { return Matrix::diagonal(a, field); }
  /// Diagonal of generator `id`.
  std::vector<Scalar> generator_diag(std::size_t id) const;
};

struct Factor {
  std::size_t gen = 0;
  std::uint64_t exp = 1;
  friend bool operator==(const Factor&, const Factor&) = default;
};

/// Run-length word: evaluation is the left-to-right product of generator powers.
struct Word {
  std::vector<Factor> factors;

  bool empty() const { return factors.empty(); }
  std::size_t length() const { return factors.size(); }
  /// Appends as-is (no merging of adjacent factors).
  Word& append(const Factor& f);
  Word& append(const Word& w);
  /// Total exponent of every generator (diagonal of the evaluated word is
  /// determined by these alone).
  std::vector<std::uint64_t> totals(std::size_t generator_count) const;

  friend bool operator==(const Word&, const Word&) = default;
};

Word concat(const Word& a, const Word& b);
/// w repeated k times.
Word repeat(const Word& w, std::uint64_t k);

/// Entries beyond this modulus in an evaluated word signal an unbalanced word.
inline constexpr double kOverflowGuard = 1e300;

GeneratorSet build_default_generators(std::size_t n, FieldTag field, std::uint64_t seed = 0);

/// Empty iff the set satisfies the separation, condtr and nonzero-diagonal requirements.
std::vector<std::string> validate_generators(const GeneratorSet& g);

GeneratorSet sigma_reduce(const GeneratorSet& g, std::size_t m);

/// Ordered product of the top-left m x m blocks of the generator powers.
/// Products are formed in extended-exponent arithmetic, so individual powers
/// may leave the double range as long as the final product does not.
Matrix eval_word(const GeneratorSet& g, const Word& w, std::size_t m);
Matrix eval_word(const GeneratorSet& g, const Word& w);
/// Extended-exponent form of the same product (no overflow guard).
ExtMatrix eval_word_ext(const GeneratorSet& g, const Word& w, std::size_t m);

/// First `count` primes.
std::vector<std::uint64_t> first_primes(std::size_t count);

// Serialization -------------------------------------------------------------

/// Generator file (JSON): keys n, field, a, T, D; scalars as 17-significant-digit
/// strings, complex scalars as [re, im].
std::string generators_to_json(const GeneratorSet& g);
GeneratorSet generators_from_json(const std::string& text);

/// One factor per line: "gen_id exponent".
std::string word_to_text(const Word& w);
Word word_from_text(const std::string& text);

}  // namespace trisemi
