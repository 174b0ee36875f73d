#include "trisemi/ordering.hpp"

#include <cmath>
#include <string>

namespace trisemi {

bool in_delta(const IndexPair& p, std::size_t n) {
  return p.s >= 1 && p.s <= p.r && static_cast<std::size_t>(p.r) <= n;
}

Order delta_compare(const IndexPair& p, const IndexPair& q) {
  if (p.s < 1 || p.s > p.r || q.s < 1 || q.s > q.r)
    throw InvalidInput("delta_compare: pair outside the lower triangle");
  if (p.offset() != q.offset()) return p.offset() < q.offset() ? Order::LT : Order::GT;
  if (p.r == q.r) return Order::EQ;
  return p.r < q.r ? Order::LT : Order::GT;
}

std::optional<IndexPair> delta_successor(const IndexPair& p, std::size_t n) {
  if (!in_delta(p, n)) throw InvalidInput("delta_successor: pair outside the lower triangle");
  const int nn = static_cast<int>(n);
  if (p.r < nn) return IndexPair{p.r + 1, p.s + 1};
  const int next_offset = p.offset() + 1;
  if (next_offset > nn - 1) return std::nullopt;
  return IndexPair{next_offset + 1, 1};
}

std::vector<IndexPair> delta_chain(std::size_t n) {
  std::vector<IndexPair> out;
  std::optional<IndexPair> p = IndexPair{1, 1};
  while (p) {
    out.push_back(*p);
    p = delta_successor(*p, n);
  }
  return out;
}

std::vector<IndexPair> elimination_path(std::size_t n) {
  std::vector<IndexPair> out;
  for (const auto& p : delta_chain(n))
    if (p.r > p.s) out.push_back(p);
  return out;
}

bool tri_class_member(const Matrix& t, const TriClassTag& tag) {
  const std::size_t n = t.dim();
  if (tag.dim != n) throw InvalidInput("tri_class_member: tag dimension does not match matrix");
  if (!in_delta(tag.anchor, n)) throw InvalidInput("tri_class_member: anchor outside the lower triangle");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(t(i, j)) > kStructuralZero)
        throw InvalidInput("tri_class_member: matrix is not lower triangular at (" + std::to_string(i + 1) +
                           "," + std::to_string(j + 1) + ")");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const IndexPair p{static_cast<int>(i + 1), static_cast<int>(j + 1)};
      if (delta_compare(p, tag.anchor) == Order::LT && std::abs(t(i, j)) > kStructuralZero) return false;
    }
  return true;
}

}  // namespace trisemi
