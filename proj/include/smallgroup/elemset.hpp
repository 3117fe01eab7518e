#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "smallgroup/errors.hpp"

namespace smallgroup {

// Subset of Z/n kept as sorted disjoint half-open intervals [a,b) with
// 0 <= a < b <= n.  Wrapping arcs are stored cut at 0, so a piece ending at n
// and a piece starting at 0 may coexist; all queries treat pieces linearly,
// which stays correct because no piece itself wraps.
class IntervalSet {
 public:
  static IntervalSet empty(std::uint64_t n) { return IntervalSet(n); }
  static IntervalSet full(std::uint64_t n) {
    IntervalSet s(n);
    s.pieces_.emplace_back(0, n);
    return s;
  }
  static IntervalSet singleton(std::uint64_t n, std::uint64_t x) {
    IntervalSet s(n);
    s.pieces_.emplace_back(x, x + 1);
    return s;
  }

  std::uint64_t universe() const { return n_; }

  std::uint64_t size() const {
    std::uint64_t total = 0;
    for (auto& [a, b] : pieces_) total += b - a;
    return total;
  }

  bool is_empty() const { return pieces_.empty(); }
  bool is_full() const { return size() == n_; }

  bool contains(std::uint64_t x) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                               [](std::uint64_t v, const auto& p) { return v < p.first; });
    if (it == pieces_.begin()) return false;
    --it;
    return x < it->second;
  }

  const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pieces() const { return pieces_; }

  // Inserts the arc of given length starting anywhere on the circle.
  void add_span(std::uint64_t start, std::uint64_t len) {
    if (len == 0) return;
    if (len >= n_) {
      pieces_.assign(1, {0, n_});
      return;
    }
    start %= n_;
    if (start + len <= n_) {
      pieces_.emplace_back(start, start + len);
    } else {
      pieces_.emplace_back(start, n_);
      pieces_.emplace_back(0, start + len - n_);
    }
    normalize();
  }

  IntervalSet unite(const IntervalSet& o) const {
    IntervalSet out(n_);
    out.pieces_ = pieces_;
    out.pieces_.insert(out.pieces_.end(), o.pieces_.begin(), o.pieces_.end());
    out.normalize();
    return out;
  }

  bool subset_of(const IntervalSet& o) const {
    for (auto& [a, b] : pieces_) {
      auto it = std::upper_bound(o.pieces_.begin(), o.pieces_.end(), a,
                                 [](std::uint64_t v, const auto& p) { return v < p.first; });
      if (it == o.pieces_.begin()) return false;
      --it;
      if (a < it->first || b > it->second) return false;
    }
    return true;
  }

  bool equals(const IntervalSet& o) const { return subset_of(o) && o.subset_of(*this); }

  // {x + y : x in this, y in o}, cyclic.  Piece sums are arcs of length
  // l1 + l2 - 1, so the result stays a short union for short inputs.
  IntervalSet cyclic_sum(const IntervalSet& o) const {
    IntervalSet out(n_);
    if (is_empty() || o.is_empty()) return out;
    for (auto& [a1, b1] : pieces_)
      for (auto& [a2, b2] : o.pieces_) out.add_span(a1 + a2, (b1 - a1) + (b2 - a2) - 1);
    return out;
  }

  IntervalSet cyclic_negate() const {
    IntervalSet out(n_);
    for (auto& [a, b] : pieces_) out.add_span((n_ - (b - 1) % n_) % n_, b - a);
    return out;
  }

  // Union of the q-blocks [kq,(k+1)q) meeting the set; requires q | n.
  IntervalSet block_snap(std::uint64_t q) const {
    IntervalSet out(n_);
    for (auto& [a, b] : pieces_) out.add_span(a - a % q, (b - a) + a % q + (q - b % q) % q);
    return out;
  }

  // Over universe n/q: indices of q-blocks entirely inside the set.
  IntervalSet full_blocks(std::uint64_t q) const {
    IntervalSet out(n_ / q);
    for (auto& [a, b] : pieces_) {
      std::uint64_t k0 = (a + q - 1) / q;
      std::uint64_t k1 = b / q;
      if (k0 < k1) out.add_span(k0, k1 - k0);
    }
    return out;
  }

  std::vector<std::uint64_t> to_list(std::uint64_t cap = UINT64_MAX) const {
    std::vector<std::uint64_t> out;
    for (auto& [a, b] : pieces_)
      for (std::uint64_t x = a; x < b && out.size() < cap; ++x) out.push_back(x);
    return out;
  }

 private:
  explicit IntervalSet(std::uint64_t n) : n_(n) {
    if (n == 0) throw ConfigError("interval set over empty universe");
  }

  void normalize() {
    std::sort(pieces_.begin(), pieces_.end());
    std::vector<std::pair<std::uint64_t, std::uint64_t>> merged;
    for (auto& p : pieces_) {
      if (!merged.empty() && p.first <= merged.back().second)
        merged.back().second = std::max(merged.back().second, p.second);
      else
        merged.push_back(p);
    }
    pieces_ = std::move(merged);
  }

  std::uint64_t n_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pieces_;
};

// Subset of {0..n-1} as a bitset; the workhorse for table and digit-string
// levels where classes are not contiguous.
class DenseSet {
 public:
  static DenseSet empty(std::uint64_t n) { return DenseSet(n); }
  static DenseSet full(std::uint64_t n) {
    DenseSet s(n);
    s.bits_.set();
    return s;
  }
  static DenseSet singleton(std::uint64_t n, std::uint64_t x) {
    DenseSet s(n);
    s.bits_.set(x);
    return s;
  }

  std::uint64_t universe() const { return bits_.size(); }
  std::uint64_t size() const { return bits_.count(); }
  bool is_empty() const { return bits_.none(); }
  bool is_full() const { return bits_.all(); }
  bool contains(std::uint64_t x) const { return bits_.test(x); }
  void insert(std::uint64_t x) { bits_.set(x); }

  DenseSet unite(const DenseSet& o) const {
    DenseSet out = *this;
    out.bits_ |= o.bits_;
    return out;
  }

  bool subset_of(const DenseSet& o) const { return bits_.is_subset_of(o.bits_); }
  bool equals(const DenseSet& o) const { return bits_ == o.bits_; }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (auto x = bits_.find_first(); x != boost::dynamic_bitset<>::npos;
         x = bits_.find_next(x))
      fn(static_cast<std::uint64_t>(x));
  }

  std::vector<std::uint64_t> to_list(std::uint64_t cap = UINT64_MAX) const {
    std::vector<std::uint64_t> out;
    for (auto x = bits_.find_first(); x != boost::dynamic_bitset<>::npos && out.size() < cap;
         x = bits_.find_next(x))
      out.push_back(x);
    return out;
  }

 private:
  explicit DenseSet(std::uint64_t n) : bits_(n) {
    if (n == 0) throw ConfigError("dense set over empty universe");
  }

  boost::dynamic_bitset<> bits_;
};

// Element-set facade: interval representation on cyclic levels (classes are
// contiguous blocks there), dense bitset otherwise.  The two agree on every
// shared operation; a test cross-checks them on small cyclic towers.
class ElemSet {
 public:
  enum class Rep { Interval, Dense };

  static ElemSet empty(std::uint64_t n, Rep r) {
    return r == Rep::Interval ? ElemSet(IntervalSet::empty(n)) : ElemSet(DenseSet::empty(n));
  }
  static ElemSet full(std::uint64_t n, Rep r) {
    return r == Rep::Interval ? ElemSet(IntervalSet::full(n)) : ElemSet(DenseSet::full(n));
  }
  static ElemSet singleton(std::uint64_t n, std::uint64_t x, Rep r) {
    return r == Rep::Interval ? ElemSet(IntervalSet::singleton(n, x))
                              : ElemSet(DenseSet::singleton(n, x));
  }

  explicit ElemSet(IntervalSet s) : rep_(Rep::Interval), iv_(std::move(s)), dn_(std::nullopt) {}
  explicit ElemSet(DenseSet s) : rep_(Rep::Dense), iv_(std::nullopt), dn_(std::move(s)) {}

  Rep rep() const { return rep_; }
  const IntervalSet& intervals() const { return *iv_; }
  const DenseSet& bits() const { return *dn_; }
  DenseSet& bits() { return *dn_; }

  std::uint64_t universe() const {
    return rep_ == Rep::Interval ? iv_->universe() : dn_->universe();
  }
  std::uint64_t size() const { return rep_ == Rep::Interval ? iv_->size() : dn_->size(); }
  bool is_empty() const { return rep_ == Rep::Interval ? iv_->is_empty() : dn_->is_empty(); }
  bool is_full() const { return rep_ == Rep::Interval ? iv_->is_full() : dn_->is_full(); }
  bool contains(std::uint64_t x) const {
    return rep_ == Rep::Interval ? iv_->contains(x) : dn_->contains(x);
  }

  ElemSet unite(const ElemSet& o) const {
    require_same_rep(o);
    return rep_ == Rep::Interval ? ElemSet(iv_->unite(*o.iv_)) : ElemSet(dn_->unite(*o.dn_));
  }
  bool subset_of(const ElemSet& o) const {
    require_same_rep(o);
    return rep_ == Rep::Interval ? iv_->subset_of(*o.iv_) : dn_->subset_of(*o.dn_);
  }
  bool equals(const ElemSet& o) const {
    require_same_rep(o);
    return rep_ == Rep::Interval ? iv_->equals(*o.iv_) : dn_->equals(*o.dn_);
  }

  std::vector<std::uint64_t> to_list(std::uint64_t cap = UINT64_MAX) const {
    return rep_ == Rep::Interval ? iv_->to_list(cap) : dn_->to_list(cap);
  }

 private:
  void require_same_rep(const ElemSet& o) const {
    if (rep_ != o.rep_ || universe() != o.universe())
      throw Error("element-set representation mismatch");
  }

  Rep rep_;
  std::optional<IntervalSet> iv_;
  std::optional<DenseSet> dn_;
};

}  // namespace smallgroup
