#pragma once

// Randomized property suites behind `trisemi verify`.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "trisemi/matcore.hpp"

namespace trisemi {

struct PropertyCount {
  std::string name;
  std::uint64_t passed = 0;
  std::uint64_t total = 0;
  bool ok() const { return passed == total; }
};

struct SuiteReport {
  std::string suite;
  std::vector<PropertyCount> properties;
  bool ok() const;
};

/// order, lemma1, lemma2, triclass, sigma, factor, eliminate.
const std::vector<std::string>& suite_names();

/// Runs one suite, or every suite for "all".  Throws InvalidInput for unknown names.
std::vector<SuiteReport> run_verify(const std::string& suite, std::size_t n, std::uint64_t trials, std::uint64_t seed);

/// Lower-triangular A with strictly increasing diagonal moduli (ratio >= 1.1)
/// and off-diagonal entries uniform in [-1, 1] (or the unit disc).
Matrix random_valid_a(std::size_t n, FieldTag field, std::mt19937_64& rng);

}  // namespace trisemi
