#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>
#include <json.hpp>

#include "smallgroup/errors.hpp"
#include "smallgroup/skeleton.hpp"

namespace smallgroup {

// Finite product space M_0 x ... x M_N; symbols are 1-based.
struct ProductSpace {
  std::vector<std::uint64_t> m;

  std::size_t coords() const { return m.size(); }

  static ProductSpace from_sizes(const std::vector<std::uint64_t>& sizes) {
    if (sizes.empty()) throw ConfigError("product space needs at least one coordinate");
    for (auto v : sizes)
      if (v == 0) throw ConfigError("product space coordinates must be nonempty");
    return {sizes};
  }

  static ProductSpace from_tower(const Tower& t) {
    std::vector<std::uint64_t> sizes;
    for (std::size_t i = 0; i <= t.depth(); ++i) sizes.push_back(t.m(i));
    return {sizes};
  }
};

inline constexpr std::uint64_t kMaxCylinderTable = 1ull << 26;

// Open set determined by the first `resolution` coordinates, stored as a
// bitset over all resolution-length prefixes in big-endian order, so the
// extensions of any shorter prefix form one contiguous index range.
// Resolution 0 is the whole space.
class DenseOpenSet {
 public:
  DenseOpenSet(const ProductSpace& sp, std::size_t resolution)
      : resolution_(resolution) {
    if (resolution > sp.coords())
      throw ConfigError("set resolution exceeds the space depth");
    sizes_.assign(sp.m.begin(), sp.m.begin() + resolution);
    std::uint64_t total = 1;
    for (auto v : sizes_) {
      if (mul_overflows_u64(total, v) || total * v > kMaxCylinderTable)
        throw ConfigError("cylinder table exceeds the size cap");
      total *= v;
    }
    ext_.assign(resolution + 1, 1);
    for (std::size_t i = resolution; i > 0; --i) ext_[i - 1] = ext_[i] * sizes_[i - 1];
    bits_.resize(total);
  }

  std::size_t resolution() const { return resolution_; }
  std::uint64_t table_size() const { return bits_.size(); }
  std::uint64_t count() const { return bits_.count(); }

  void check_symbols(const std::vector<std::uint32_t>& prefix) const {
    for (std::size_t i = 0; i < prefix.size() && i < resolution_; ++i)
      if (prefix[i] < 1 || prefix[i] > sizes_[i])
        throw AlphabetMismatch("symbol " + std::to_string(prefix[i]) +
                               " out of range at coordinate " + std::to_string(i));
  }

  // Marks every resolution-length extension of the prefix.
  void add_prefix(const std::vector<std::uint32_t>& prefix) {
    if (prefix.size() > resolution_)
      throw ConfigError("prefix longer than the set resolution");
    check_symbols(prefix);
    std::uint64_t base = 0;
    for (std::size_t i = 0; i < prefix.size(); ++i)
      base += (prefix[i] - 1) * ext_[i + 1];
    std::uint64_t block = ext_[prefix.size()];
    for (std::uint64_t x = 0; x < block; ++x) bits_.set(base + x);
  }

  static DenseOpenSet whole(const ProductSpace& sp) {
    DenseOpenSet s(sp, 0);
    s.add_prefix({});
    return s;
  }

  // [prefix] subset of the set.
  bool contains_cylinder(const std::vector<std::uint32_t>& prefix) const {
    check_symbols(prefix);
    if (prefix.size() >= resolution_) {
      std::uint64_t idx = 0;
      for (std::size_t i = 0; i < resolution_; ++i) idx += (prefix[i] - 1) * ext_[i + 1];
      return bits_.test(idx);
    }
    std::uint64_t base = 0;
    for (std::size_t i = 0; i < prefix.size(); ++i)
      base += (prefix[i] - 1) * ext_[i + 1];
    std::uint64_t block = ext_[prefix.size()];
    for (std::uint64_t x = 0; x < block; ++x)
      if (!bits_.test(base + x)) return false;
    return true;
  }

  bool contains_point(const std::vector<std::uint32_t>& word) const {
    if (word.size() < resolution_) throw ConfigError("point shorter than the set resolution");
    return contains_cylinder(word);
  }

  // Every stem one coordinate short of the resolution extends into the set.
  bool is_dense() const {
    if (resolution_ == 0) return bits_.test(0);
    std::uint64_t stem_block = sizes_[resolution_ - 1];
    for (std::uint64_t base = 0; base < bits_.size(); base += stem_block) {
      bool any = false;
      for (std::uint64_t x = 0; x < stem_block && !any; ++x) any = bits_.test(base + x);
      if (!any) return false;
    }
    return true;
  }

  // All coordinate-length-`resolution` prefixes in the set, for reports.
  std::vector<std::vector<std::uint32_t>> prefixes(std::uint64_t cap = 64) const {
    std::vector<std::vector<std::uint32_t>> out;
    for (std::uint64_t idx = 0; idx < bits_.size() && out.size() < cap; ++idx) {
      if (!bits_.test(idx)) continue;
      std::vector<std::uint32_t> p(resolution_);
      std::uint64_t rem = idx;
      for (std::size_t i = resolution_; i > 0; --i) {
        p[i - 1] = static_cast<std::uint32_t>(rem % sizes_[i - 1]) + 1;
        rem /= sizes_[i - 1];
      }
      out.push_back(std::move(p));
    }
    return out;
  }

  // The set {w : w_c in allowed}, at resolution c+1.
  static DenseOpenSet coordinate_window(const ProductSpace& sp, std::size_t c,
                                        const std::vector<std::uint32_t>& allowed) {
    if (c >= sp.coords()) throw ConfigError("window coordinate beyond the space");
    DenseOpenSet s(sp, c + 1);
    std::vector<bool> ok(sp.m[c] + 1, false);
    for (auto v : allowed) {
      if (v < 1 || v > sp.m[c]) throw AlphabetMismatch("window symbol out of range");
      ok[v] = true;
    }
    std::uint64_t last = sp.m[c];
    for (std::uint64_t idx = 0; idx < s.bits_.size(); ++idx)
      if (ok[idx % last + 1]) s.bits_.set(idx);
    return s;
  }

 private:
  std::size_t resolution_;
  std::vector<std::uint64_t> sizes_;  // M_0..M_{D-1}
  std::vector<std::uint64_t> ext_;    // ext_[i] = prod of sizes_[i..D-1]
  boost::dynamic_bitset<> bits_;
};

inline void validate_dense_family(const ProductSpace& sp,
                                  const std::vector<DenseOpenSet>& sets) {
  (void)sp;
  for (std::size_t k = 0; k + 1 < sets.size(); ++k)
    if (sets[k + 1].resolution() < sets[k].resolution())
      throw NonIncreasingResolutions("set " + std::to_string(k + 2) +
                                     " is coarser than its predecessor");
  for (std::size_t k = 0; k < sets.size(); ++k)
    if (!sets[k].is_dense())
      throw CheckFailure("set " + std::to_string(k + 1) + " is not dense");
}

// Run of the covering game: breakpoints 0 = n_0 < n_1 < ... < n_T and the
// reply word r over [0, n_T).  Segment k spans [n_{k-1}, n_k) and steers
// every prefix of length n_{k-1} into the k-th set:
//   for all p in M^{n_{k-1}}:  [p ^ r|segment] subset of U_k.
struct GameSolution {
  std::vector<std::size_t> breakpoints;
  std::vector<std::uint32_t> r;
};

namespace detail {

// Applies fn to every stem of the given length; returns false on first veto.
template <typename Fn>
inline bool all_stems(const ProductSpace& sp, std::size_t len, Fn&& fn) {
  std::vector<std::uint32_t> stem(len, 1);
  while (true) {
    if (!fn(stem)) return false;
    std::size_t pos = len;
    while (pos > 0 && stem[pos - 1] == sp.m[pos - 1]) {
      stem[pos - 1] = 1;
      --pos;
    }
    if (pos == 0) return true;
    ++stem[pos - 1];
  }
}

// Segment valid for stage set u after prefix length n: every stem (cut at
// the set's resolution) extended by the segment lies inside u.
inline bool segment_works(const ProductSpace& sp, const DenseOpenSet& u, std::size_t n,
                          const std::vector<std::uint32_t>& segment) {
  std::size_t stem_len = std::min(n, u.resolution());
  return all_stems(sp, stem_len, [&](const std::vector<std::uint32_t>& stem) {
    std::vector<std::uint32_t> q = stem;
    q.resize(n, 1);  // coordinates in [stem_len, n) never reach the resolution cut
    q.insert(q.end(), segment.begin(), segment.end());
    return u.contains_cylinder(q);
  });
}

}  // namespace detail

// Greedy stage-by-stage solver: the shortest (then lexicographically first)
// segment entering the stage's set is appended; an empty winning segment is
// widened to "1" so breakpoints stay strictly increasing.
inline GameSolution solve_game(const ProductSpace& sp,
                               const std::vector<DenseOpenSet>& sets) {
  validate_dense_family(sp, sets);
  GameSolution sol;
  sol.breakpoints = {0};
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const DenseOpenSet& u = sets[k];
    std::size_t n = sol.breakpoints.back();
    bool found = false;
    for (std::size_t len = 0; !found && n + len <= sp.coords(); ++len) {
      std::vector<std::uint32_t> seg(len, 1);
      while (true) {
        if (detail::segment_works(sp, u, n, seg)) {
          // An empty winning segment widens to "1"; subsets of a winning
          // cylinder still win, so the widened segment stays valid.
          std::vector<std::uint32_t> chosen = seg.empty() ? std::vector<std::uint32_t>{1} : seg;
          if (n + chosen.size() <= sp.coords()) {
            sol.r.insert(sol.r.end(), chosen.begin(), chosen.end());
            sol.breakpoints.push_back(n + chosen.size());
            found = true;
          }
          break;
        }
        std::size_t pos = len;
        while (pos > 0 && seg[pos - 1] == sp.m[n + pos - 1]) {
          seg[pos - 1] = 1;
          --pos;
        }
        if (pos == 0) break;
        ++seg[pos - 1];
      }
    }
    if (!found)
      throw SpaceTooShallow("no segment inside the space reaches set " + std::to_string(k + 1),
                            k + 1);
  }
  return sol;
}

struct StageCheck {
  std::size_t stage = 0;
  bool steered = false;  // the universal containment above
};

struct GameVerify {
  bool shape_ok = false;
  std::vector<StageCheck> stages;
  bool ok = false;
};

inline GameVerify verify_game(const ProductSpace& sp, const std::vector<DenseOpenSet>& sets,
                              const GameSolution& sol) {
  GameVerify out;
  const auto& n = sol.breakpoints;
  out.shape_ok = !n.empty() && n[0] == 0 && n.size() == sets.size() + 1 &&
                 std::is_sorted(n.begin(), n.end()) &&
                 std::adjacent_find(n.begin(), n.end()) == n.end() &&
                 n.back() <= sp.coords() && sol.r.size() == n.back();
  if (out.shape_ok)
    for (std::size_t i = 0; i < sol.r.size(); ++i)
      if (sol.r[i] < 1 || sol.r[i] > sp.m[i]) out.shape_ok = false;
  out.ok = out.shape_ok;
  if (!out.shape_ok) return out;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    std::vector<std::uint32_t> seg(sol.r.begin() + n[k], sol.r.begin() + n[k + 1]);
    StageCheck sc;
    sc.stage = k + 1;
    sc.steered = detail::segment_works(sp, sets[k], n[k], seg);
    out.ok = out.ok && sc.steered;
    out.stages.push_back(sc);
  }
  return out;
}

// Draws words agreeing with the reply on stage k's segment and random
// elsewhere; every draw must land in the k-th set.
struct SampleVerify {
  std::size_t samples = 0;
  std::size_t hits = 0;
  bool ok = false;
};

inline SampleVerify sample_verify(const ProductSpace& sp,
                                  const std::vector<DenseOpenSet>& sets,
                                  const GameSolution& sol, std::mt19937_64& rng,
                                  std::size_t per_stage) {
  SampleVerify out;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (std::size_t s = 0; s < per_stage; ++s) {
      std::vector<std::uint32_t> w(sp.coords());
      // Plain modulo draws: bias is irrelevant here and the stream stays
      // identical across standard libraries.
      for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = static_cast<std::uint32_t>(1 + rng() % sp.m[i]);
      for (std::size_t i = sol.breakpoints[k]; i < sol.breakpoints[k + 1]; ++i) w[i] = sol.r[i];
      ++out.samples;
      if (sets[k].contains_point(w)) ++out.hits;
    }
  }
  out.ok = out.hits == out.samples;
  return out;
}

enum class Parity { Even, Odd };

inline const char* parity_name(Parity p) { return p == Parity::Even ? "even" : "odd"; }

// Coordinate selector built from the solution's breakpoints: coordinates
// fall into blocks [n_j, n_{j+1}) (the last block is unbounded), and the
// parity picks every other block.
struct BlockParitySurrogate {
  std::vector<std::size_t> breakpoints;
  Parity parity = Parity::Even;

  std::size_t block_of(std::size_t i) const {
    std::size_t j = 0;
    while (j + 1 < breakpoints.size() && breakpoints[j + 1] <= i) ++j;
    return j;
  }
  bool selects_block(std::size_t j) const {
    return (j % 2 == 0) == (parity == Parity::Even);
  }
  bool selects_coordinate(std::size_t i) const { return selects_block(block_of(i)); }

  std::vector<std::size_t> selected_coordinates(std::size_t upto) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < upto; ++i)
      if (selects_coordinate(i)) out.push_back(i);
    return out;
  }
};

// Interleaves the identity thread with the game reply: identity symbols on
// selected coordinates, the reply elsewhere (1 past the reply's end).  The
// word then sits in the base chain sets on every selected level and in
// every stage set whose segment block was left unselected.
struct DemoResult {
  std::vector<std::uint32_t> word;
  std::vector<std::size_t> selected;
  bool base_membership_ok = false;
  std::vector<std::size_t> steered_stages;  // stages verified via their segment
  std::vector<std::size_t> member_stages;   // all stages whose set contains the word
  bool ok = false;
};

inline DemoResult demo_nonmeager(const LevelSetsBundle& b, const ProductSpace& sp,
                                 const std::vector<DenseOpenSet>& sets,
                                 const GameSolution& sol, Parity parity) {
  ProductSpace tower_space = ProductSpace::from_tower(b.tower());
  if (tower_space.m != sp.m)
    throw AlphabetMismatch("game space does not match the tower's fiber counts");
  BlockParitySurrogate sel{sol.breakpoints, parity};
  DemoResult out;
  out.selected = sel.selected_coordinates(sp.coords());
  out.word.resize(sp.coords());
  for (std::size_t i = 0; i < sp.coords(); ++i) {
    if (sel.selects_coordinate(i))
      out.word[i] = 1;
    else
      out.word[i] = i < sol.r.size() ? sol.r[i] : 1;
  }
  CoordinateWord cw{out.word};
  out.base_membership_ok = membership_truncated(b, cw, 0, out.selected);
  bool stages_ok = true;
  for (std::size_t k = 1; k <= sets.size(); ++k) {
    bool in_set = sets[k - 1].contains_point(out.word);
    if (in_set) out.member_stages.push_back(k);
    if (!sel.selects_block(k - 1)) {
      out.steered_stages.push_back(k);
      stages_ok = stages_ok && in_set;
    }
  }
  out.ok = out.base_membership_ok && stages_ok;
  return out;
}

// Random family of coordinate-window sets: strictly increasing window
// coordinates keep resolutions increasing, proper nonempty windows keep the
// sets dense and distinct from the whole space.
struct WindowFamily {
  std::vector<DenseOpenSet> sets;
  std::vector<std::size_t> coords;
  std::vector<std::vector<std::uint32_t>> allowed;
};

inline WindowFamily make_window_family(const ProductSpace& sp, std::size_t stages,
                                       std::mt19937_64& rng, bool include_one) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < sp.coords(); ++i)
    if (sp.m[i] >= 2) eligible.push_back(i);
  if (eligible.size() < stages)
    throw ConfigError("space has too few branching coordinates for the requested stages");
  // Selection sampling keeps the picked coordinates ascending and the draw
  // stream independent of the standard library's sample/distribution details.
  std::vector<std::size_t> picked;
  std::size_t need = stages;
  for (std::size_t idx = 0; idx < eligible.size() && need > 0; ++idx) {
    std::size_t remaining = eligible.size() - idx;
    if (rng() % remaining < need) {
      picked.push_back(eligible[idx]);
      --need;
    }
  }
  WindowFamily fam;
  for (std::size_t c : picked) {
    std::uint64_t mc = sp.m[c];
    std::vector<std::uint32_t> allowed;
    while (true) {
      allowed.clear();
      for (std::uint32_t v = 1; v <= mc; ++v) {
        if (include_one && v == 1) {
          allowed.push_back(v);
          continue;
        }
        if (rng() & 1) allowed.push_back(v);
      }
      if (!allowed.empty() && allowed.size() < mc) break;
    }
    fam.coords.push_back(c);
    fam.allowed.push_back(allowed);
    fam.sets.push_back(DenseOpenSet::coordinate_window(sp, c, allowed));
  }
  return fam;
}

// JSON forms:
//   space: [1,2,4] (sizes)
//   sets:  [{"resolution":2,"prefixes":[[1],[2,1]]}, ...]
//          or the bare form [[[1,1],[2,1]], ...] where each set is a prefix
//          list and the resolution is the longest prefix.
inline std::vector<DenseOpenSet> dense_sets_from_json(const ProductSpace& sp,
                                                      const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("dense set list must be a JSON array");
  std::vector<DenseOpenSet> out;
  for (const auto& item : j) {
    if (item.is_array()) {
      std::size_t res = 0;
      for (const auto& p : item) res = std::max(res, p.size());
      DenseOpenSet s(sp, res);
      for (const auto& p : item) s.add_prefix(p.get<std::vector<std::uint32_t>>());
      out.push_back(std::move(s));
      continue;
    }
    if (item.contains("window")) {
      const auto& w = item.at("window");
      out.push_back(DenseOpenSet::coordinate_window(
          sp, w.at("coordinate").get<std::size_t>(),
          w.at("allowed").get<std::vector<std::uint32_t>>()));
      continue;
    }
    DenseOpenSet s(sp, item.at("resolution").get<std::size_t>());
    for (const auto& p : item.at("prefixes"))
      s.add_prefix(p.get<std::vector<std::uint32_t>>());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace smallgroup
