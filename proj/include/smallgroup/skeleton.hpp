#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "smallgroup/coords.hpp"
#include "smallgroup/errors.hpp"
#include "smallgroup/level_sets.hpp"

namespace smallgroup {

// Tower plus fiber enumeration plus the chain sets of every level, built
// once and shared.  Pointer members keep the enumeration's tower reference
// stable under copies and moves.
class LevelSetsBundle {
 public:
  static LevelSetsBundle build(Tower t, std::size_t j_max) {
    LevelSetsBundle b;
    b.j_max_ = j_max;
    b.tower_ = std::make_shared<const Tower>(std::move(t));
    b.fibers_ = std::make_shared<const FiberEnumeration>(*b.tower_);
    for (std::size_t i = 0; i <= b.tower_->depth(); ++i)
      b.per_level_.push_back(build_level_sets(*b.tower_, *b.fibers_, i, j_max));
    return b;
  }

  const Tower& tower() const { return *tower_; }
  const FiberEnumeration& fibers() const { return *fibers_; }
  std::size_t depth() const { return tower_->depth(); }
  std::size_t j_max() const { return j_max_; }

  const LevelSets& at(std::size_t i) const {
    if (i >= per_level_.size())
      throw LevelSetsMissing("no chain sets for level " + std::to_string(i), i);
    return per_level_[i];
  }

  // |B_i^n| with the convention that the chain is full past the level index.
  const ElemSet& b_set(std::size_t i, std::size_t n) const {
    const LevelSets& ls = at(i);
    if (n > ls.j_max())
      throw LevelSetsMissing(
          "chain index " + std::to_string(n) + " not built for level " + std::to_string(i),
          i);
    return ls.B[n];
  }

 private:
  std::shared_ptr<const Tower> tower_;
  std::shared_ptr<const FiberEnumeration> fibers_;
  std::vector<LevelSets> per_level_;
  std::size_t j_max_ = 0;
};

// Element of the coordinate space together with the data making its
// chain-set membership checkable: word coordinates lie in B_i^n for every
// level i in `levels`.
struct WitnessedElement {
  CoordinateWord word;
  std::size_t n = 0;
  std::vector<std::size_t> levels;
  // Combine never has to discard levels in this calculus; kept so the
  // invariant is visible in reports.
  std::vector<std::size_t> dropped_levels;
};

inline bool membership_truncated(const LevelSetsBundle& b, const CoordinateWord& w,
                                 std::size_t n, const std::vector<std::size_t>& levels) {
  for (std::size_t i : levels) {
    if (i >= w.k.size())
      throw ConfigError("membership level " + std::to_string(i) + " beyond the word");
    if (!b.b_set(i, n).contains(w.k[i] - 1)) return false;
  }
  return true;
}

inline WitnessedElement witness_product(const LevelSetsBundle& b, const WitnessedElement& x,
                                        const WitnessedElement& y) {
  if (x.word.k.size() != y.word.k.size())
    throw ConfigError("witness product needs words of equal length");
  WitnessedElement out;
  out.word = multiply_words(b.tower(), b.fibers(), x.word, y.word);
  out.n = std::max(x.n, y.n) + 1;
  auto xs = x.levels, ys = y.levels;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  std::set_intersection(xs.begin(), xs.end(), ys.begin(), ys.end(),
                        std::back_inserter(out.levels));
  if (!membership_truncated(b, out.word, out.n, out.levels))
    throw WitnessViolation("product witness fails its own membership test");
  return out;
}

inline WitnessedElement witness_inverse(const LevelSetsBundle& b, const WitnessedElement& x) {
  WitnessedElement out;
  out.word = invert_word(b.tower(), b.fibers(), x.word);
  out.n = x.n + 1;
  out.levels = x.levels;
  if (!membership_truncated(b, out.word, out.n, out.levels))
    throw WitnessViolation("inverse witness fails its own membership test");
  return out;
}

// Measure of the event "some coordinate k in [i0, N] lands in B_k^n", exact
// under the product measure since coordinates are independent.  When
// i0 >= max(n, 1) each term is at most 1/k^2 (levels are thin and chains
// grow), giving the reciprocal-square bound.
struct TailMeasure {
  std::size_t n = 0;
  std::size_t i0 = 0;
  std::size_t top = 0;
  Rat exact;             // 1 - prod (1 - b_k/m_k)
  Rat term_sum;          // sum b_k/m_k
  Rat reciprocal_bound;  // sum 1/k^2
  bool within_bound = false;
};

inline TailMeasure tail_event_measure(const LevelSetsBundle& b, std::size_t n,
                                      std::size_t i0, std::size_t top) {
  if (i0 == 0) throw ConfigError("tail start level must be >= 1");
  if (top > b.depth()) throw ConfigError("tail top level beyond the tower");
  if (i0 > top) throw ConfigError("tail start beyond its top level");
  TailMeasure out;
  out.n = n;
  out.i0 = i0;
  out.top = top;
  Rat miss = 1;
  out.term_sum = 0;
  out.reciprocal_bound = 0;
  for (std::size_t k = i0; k <= top; ++k) {
    Rat p(Int(b.b_set(k, n).size()), Int(b.tower().m(k)));
    miss *= (Rat(1) - p);
    out.term_sum += p;
    out.reciprocal_bound += Rat(Int(1), Int(k) * Int(k));
  }
  out.exact = Rat(1) - miss;
  out.within_bound = i0 >= n ? out.exact <= out.reciprocal_bound
                             : out.exact <= out.term_sum;
  return out;
}

}  // namespace smallgroup
