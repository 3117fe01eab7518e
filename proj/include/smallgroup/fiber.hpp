#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "smallgroup/errors.hpp"
#include "smallgroup/group.hpp"

namespace smallgroup {

// Canonical fiber enumeration of a tower level i >= 1: the fiber over each
// g in G_{i-1} is listed in ascending element order, except that the
// identity is moved to the front of its own fiber.  psi_i(x) is the 1-based
// position of x inside its fiber, so psi_i(identity) == 1 at every level.
// The k-th class of level i is the set of fiber positions k across all
// fibers; classes partition G_i into m_i pieces of size |G_{i-1}|.
//
// Closed forms (no tables needed):
//   Cyclic, mod bond, q = |G_{i-1}|:  fiber(g) = g, g+q, g+2q, ...
//     psi(x) = x / q + 1, class k = the block [(k-1)q, kq).
//   Product, div bond, d = m_i:       fiber(g) = g*d, g*d+1, ...
//     psi(x) = x % d + 1, class k = {x : x % d == k-1}.
// Both make the identity fiber start at 0, so no front-move is needed.
class FiberEnumeration {
 public:
  explicit FiberEnumeration(const Tower& t) : tower_(&t) {
    psi_tables_.resize(t.levels.size());
    fiber_tables_.resize(t.levels.size());
    for (std::size_t i = 1; i < t.levels.size(); ++i) {
      if (closed_form(i)) continue;
      build_table(i);
    }
  }

  const Tower& tower() const { return *tower_; }
  std::uint64_t class_count(std::size_t i) const { return tower_->m(i); }

  // 1-based class index of x at level i; psi_0 is constant 1.
  std::uint32_t psi(std::size_t i, std::uint64_t x) const {
    if (i == 0) return 1;
    const auto& g = tower_->levels[i];
    std::uint64_t q = tower_->order(i - 1);
    if (closed_form(i)) {
      if (g.kind() == GroupKind::Cyclic) return static_cast<std::uint32_t>(x / q + 1);
      return static_cast<std::uint32_t>(x % tower_->m(i) + 1);
    }
    return psi_tables_[i][x];
  }

  // j-th element (1-based) of the fiber over parent at level i.
  std::uint64_t fiber_element(std::size_t i, std::uint64_t parent, std::uint32_t j) const {
    if (i == 0) return 0;
    const auto& g = tower_->levels[i];
    std::uint64_t q = tower_->order(i - 1);
    if (closed_form(i)) {
      if (g.kind() == GroupKind::Cyclic) return parent + (static_cast<std::uint64_t>(j) - 1) * q;
      return parent * tower_->m(i) + (j - 1);
    }
    return fiber_tables_[i][parent * tower_->m(i) + (j - 1)];
  }

  std::vector<std::uint64_t> fiber(std::size_t i, std::uint64_t parent) const {
    std::vector<std::uint64_t> out;
    if (i == 0) {
      out.push_back(0);
      return out;
    }
    std::uint64_t m = tower_->m(i);
    out.reserve(m);
    for (std::uint32_t j = 1; j <= m; ++j) out.push_back(fiber_element(i, parent, j));
    return out;
  }

  // idx-th member of class k at level i, indexed by the parent element.
  std::uint64_t class_member(std::size_t i, std::uint32_t k, std::uint64_t idx) const {
    return fiber_element(i, idx, k);
  }

  bool closed_form(std::size_t i) const {
    const auto& g = tower_->levels[i];
    const auto& b = tower_->bonds[i - 1];
    return (g.kind() == GroupKind::Cyclic && b.kind() == SurjHom::Kind::Mod) ||
           (g.kind() == GroupKind::Product && b.kind() == SurjHom::Kind::Div);
  }

 private:
  void build_table(std::size_t i) {
    const auto& t = *tower_;
    std::uint64_t n = t.order(i);
    std::uint64_t q = t.order(i - 1);
    std::uint64_t m = t.m(i);
    std::vector<std::vector<std::uint64_t>> fibers(q);
    for (auto& f : fibers) f.reserve(m);
    for (std::uint64_t x = 0; x < n; ++x) fibers[t.bonds[i - 1](x)].push_back(x);
    for (auto& f : fibers) std::sort(f.begin(), f.end());
    std::uint64_t e = t.levels[i].identity();
    auto& ef = fibers[t.bonds[i - 1](e)];
    auto it = std::find(ef.begin(), ef.end(), e);
    ef.erase(it);
    ef.insert(ef.begin(), e);

    psi_tables_[i].assign(n, 0);
    fiber_tables_[i].assign(n, 0);
    for (std::uint64_t parent = 0; parent < q; ++parent)
      for (std::uint64_t j = 0; j < m; ++j) {
        std::uint64_t x = fibers[parent][j];
        psi_tables_[i][x] = static_cast<std::uint32_t>(j + 1);
        fiber_tables_[i][parent * m + j] = x;
      }
  }

  const Tower* tower_;
  std::vector<std::vector<std::uint32_t>> psi_tables_;
  std::vector<std::vector<std::uint64_t>> fiber_tables_;
};

}  // namespace smallgroup
