#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <vector>

#include "trisemi/matcore.hpp"

namespace trisemi {

/// Position (r, s) of the lower triangle, 1-based, 1 <= s <= r <= n.
struct IndexPair {
  int r = 1;
  int s = 1;

  int offset() const { return r - s; }
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

enum class Order { LT, EQ, GT };

/// Matrices vanishing on every position strictly preceding `anchor`.
struct TriClassTag {
  IndexPair anchor;
  std::size_t dim = 0;
};

/// Structural-zero threshold for class membership.
inline constexpr double kStructuralZero = 1e-14;

bool in_delta(const IndexPair& p, std::size_t n);

/// Diagonal offset first, then row.  Throws InvalidInput for pairs outside the triangle.
Order delta_compare(const IndexPair& p, const IndexPair& q);

std::optional<IndexPair> delta_successor(const IndexPair& p, std::size_t n);

/// Every position of the triangle in increasing order, starting at (1,1).
std::vector<IndexPair> delta_chain(std::size_t n);

/// Off-diagonal positions in elimination order, (2,1) through (n,1).
std::vector<IndexPair> elimination_path(std::size_t n);

bool tri_class_member(const Matrix& t, const TriClassTag& tag);

}  // namespace trisemi
