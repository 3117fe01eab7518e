#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smallgroup/elemset.hpp"
#include "smallgroup/errors.hpp"
#include "smallgroup/fiber.hpp"
#include "smallgroup/group.hpp"
#include "smallgroup/rational.hpp"

namespace smallgroup {

// Cyclic levels with mod bonds have contiguous classes, so interval sets are
// exact and fast there; everything else uses bitsets.
inline ElemSet::Rep preferred_rep(const Tower& t, std::size_t i) {
  if (i == 0) return t.levels[0].kind() == GroupKind::Cyclic ? ElemSet::Rep::Interval
                                                             : ElemSet::Rep::Dense;
  bool cyclic = t.levels[i].kind() == GroupKind::Cyclic &&
                t.bonds[i - 1].kind() == SurjHom::Kind::Mod;
  return cyclic ? ElemSet::Rep::Interval : ElemSet::Rep::Dense;
}

inline ElemSet op_product(const FiniteGroup& g, const ElemSet& a, const ElemSet& b) {
  if (a.is_empty() || b.is_empty()) return ElemSet::empty(a.universe(), a.rep());
  if (a.is_full() || b.is_full()) return ElemSet::full(a.universe(), a.rep());
  if (a.rep() == ElemSet::Rep::Interval) {
    if (g.kind() != GroupKind::Cyclic)
      throw Error("interval product requires a cyclic level");
    return ElemSet(a.intervals().cyclic_sum(b.intervals()));
  }
  ElemSet out = ElemSet::empty(a.universe(), ElemSet::Rep::Dense);
  a.bits().for_each([&](std::uint64_t x) {
    b.bits().for_each([&](std::uint64_t y) { out.bits().insert(g.op(x, y)); });
  });
  return out;
}

inline ElemSet op_inverse(const FiniteGroup& g, const ElemSet& a) {
  if (a.is_empty() || a.is_full()) return a;
  if (a.rep() == ElemSet::Rep::Interval) {
    if (g.kind() != GroupKind::Cyclic)
      throw Error("interval inverse requires a cyclic level");
    return ElemSet(a.intervals().cyclic_negate());
  }
  ElemSet out = ElemSet::empty(a.universe(), ElemSet::Rep::Dense);
  a.bits().for_each([&](std::uint64_t x) { out.bits().insert(g.inverse(x)); });
  return out;
}

// H |-> HH u (HH)^{-1}
inline ElemSet op_F(const FiniteGroup& g, const ElemSet& h) {
  ElemSet hh = op_product(g, h, h);
  return hh.unite(op_inverse(g, hh));
}

// Minimal class-union cover of H at level i: the union of every class that
// meets H.  Class unions are fixed points.
inline ElemSet op_G(const Tower& t, const FiberEnumeration& fe, std::size_t i,
                    const ElemSet& h) {
  if (h.is_empty() || h.is_full()) return h;
  if (i == 0) return ElemSet::full(1, h.rep());
  std::uint64_t q = t.order(i - 1);
  if (h.rep() == ElemSet::Rep::Interval) return ElemSet(h.intervals().block_snap(q));
  std::uint64_t m = t.m(i);
  std::vector<bool> marked(m, false);
  h.bits().for_each([&](std::uint64_t x) { marked[fe.psi(i, x) - 1] = true; });
  ElemSet out = ElemSet::empty(h.universe(), ElemSet::Rep::Dense);
  for (std::uint64_t k = 0; k < m; ++k)
    if (marked[k])
      for (std::uint64_t idx = 0; idx < q; ++idx)
        out.bits().insert(fe.class_member(i, static_cast<std::uint32_t>(k + 1), idx));
  return out;
}

// {k : class k of level i lies inside A}, stored 0-based over universe m_i.
// Exact shadow when A is a class union.
inline ElemSet shadow_classes(const Tower& t, const FiberEnumeration& fe, std::size_t i,
                              const ElemSet& a) {
  std::uint64_t m = t.m(i);
  if (i == 0) {
    return a.is_empty() ? ElemSet::empty(1, a.rep()) : ElemSet::full(1, a.rep());
  }
  std::uint64_t q = t.order(i - 1);
  if (a.rep() == ElemSet::Rep::Interval) return ElemSet(a.intervals().full_blocks(q));
  ElemSet out = ElemSet::empty(m, ElemSet::Rep::Dense);
  for (std::uint64_t k = 1; k <= m; ++k) {
    bool all = true;
    for (std::uint64_t idx = 0; idx < q && all; ++idx)
      all = a.contains(fe.class_member(i, static_cast<std::uint32_t>(k), idx));
    if (all) out.bits().insert(k - 1);
  }
  return out;
}

// Union of the classes indexed (0-based) by b.
inline ElemSet expand_classes(const Tower& t, const FiberEnumeration& fe, std::size_t i,
                              const ElemSet& b) {
  if (i == 0)
    return b.is_empty() ? ElemSet::empty(1, b.rep()) : ElemSet::full(1, b.rep());
  std::uint64_t q = t.order(i - 1);
  if (b.rep() == ElemSet::Rep::Interval) {
    IntervalSet out = IntervalSet::empty(t.order(i));
    for (auto& [k0, k1] : b.intervals().pieces()) out.add_span(k0 * q, (k1 - k0) * q);
    return ElemSet(out);
  }
  ElemSet out = ElemSet::empty(t.order(i), ElemSet::Rep::Dense);
  b.bits().for_each([&](std::uint64_t k) {
    for (std::uint64_t idx = 0; idx < q; ++idx)
      out.bits().insert(fe.class_member(i, static_cast<std::uint32_t>(k + 1), idx));
  });
  return out;
}

// The chain A^0 c A^1 c ... at one level: A^0 covers {identity}, each
// successor covers F of its predecessor while j <= i, and beyond the level
// index the chain is the whole level by convention.  B^j is the class
// shadow of A^j.
struct LevelSets {
  std::size_t level = 0;
  std::vector<ElemSet> A;  // indexed by j = 0..j_max
  std::vector<ElemSet> B;  // class indices, 0-based internally

  std::size_t j_max() const { return A.size() - 1; }
};

inline LevelSets build_level_sets(const Tower& t, const FiberEnumeration& fe, std::size_t i,
                                  std::size_t j_max,
                                  std::optional<ElemSet::Rep> force_rep = std::nullopt) {
  LevelSets ls;
  ls.level = i;
  ElemSet::Rep rep = force_rep.value_or(preferred_rep(t, i));
  std::uint64_t n = t.order(i);
  ElemSet ident = ElemSet::singleton(n, t.levels[i].identity(), rep);
  ls.A.push_back(op_G(t, fe, i, ident));
  for (std::size_t j = 1; j <= j_max; ++j) {
    if (j <= i)
      ls.A.push_back(op_G(t, fe, i, op_F(t.levels[i], ls.A[j - 1])));
    else
      ls.A.push_back(ElemSet::full(n, rep));
  }
  for (auto& a : ls.A) ls.B.push_back(shadow_classes(t, fe, i, a));
  return ls;
}

// One verified closure relation instance.
struct ClosureCheck {
  std::string relation;  // product / inverse / chain / index-product / ...
  std::string tag;
  std::size_t level = 0;
  std::size_t j = 0;
  bool ok = false;
};

// Verifies the six closure relations between consecutive chain members plus
// the exact-shadow property, for j = 0..j_max-1.
inline std::vector<ClosureCheck> verify_level_closure(const Tower& t,
                                                      const FiberEnumeration& fe,
                                                      const LevelSets& ls) {
  std::vector<ClosureCheck> out;
  const auto& g = t.levels[ls.level];
  std::vector<ElemSet> expanded;
  for (const auto& b : ls.B) expanded.push_back(expand_classes(t, fe, ls.level, b));
  for (std::size_t j = 0; j + 1 < ls.A.size(); ++j) {
    const ElemSet& a = ls.A[j];
    const ElemSet& a1 = ls.A[j + 1];
    out.push_back({"product", "Aszorz", ls.level, j, op_product(g, a, a).subset_of(a1)});
    out.push_back({"inverse", "Ainv", ls.level, j, op_inverse(g, a).subset_of(a1)});
    out.push_back({"chain", "Amon", ls.level, j, a.subset_of(a1)});
    const ElemSet& u = expanded[j];
    const ElemSet& u1 = expanded[j + 1];
    out.push_back(
        {"index-product", "Bszorz", ls.level, j, op_product(g, u, u).subset_of(u1)});
    out.push_back({"index-inverse", "Binv", ls.level, j, op_inverse(g, u).subset_of(u1)});
    out.push_back({"index-chain", "Bmon", ls.level, j, ls.B[j].subset_of(ls.B[j + 1])});
  }
  for (std::size_t j = 0; j < ls.A.size(); ++j)
    out.push_back({"exact-shadow", "BAof", ls.level, j, expanded[j].equals(ls.A[j])});
  return out;
}

// bound(c, 0) = c, bound(c, j+1) = 2 bound(c, j)^2 c.  Upper-bounds the size
// of the j-th chain member over a seed of size c, independent of the level.
inline Int apriori_bound(const Int& c, std::size_t j) {
  Int b = c;
  for (std::size_t step = 0; step < j; ++step) b = 2 * b * b * c;
  return b;
}

enum class ThinMode { Apriori, Exact };

inline const char* thin_mode_name(ThinMode m) {
  return m == ThinMode::Apriori ? "apriori" : "exact";
}

struct ThinLevelInfo {
  std::size_t level = 0;
  std::size_t index = 0;         // chosen exponent n_i
  std::uint64_t order = 0;       // |G_i|
  std::uint64_t m = 0;           // fiber count
  std::uint64_t b_top = 0;       // |B_i^i|
  std::uint64_t required = 0;    // |B_i^i| * i^2
  Int apriori_d = 0;             // bound(|G_{i-1}|, i)
  Int apriori_required = 0;      // apriori_d * i^2
  bool thinness_ok = false;      // required <= m
};

struct ThinResult {
  GeneratorSpec generator;
  ThinMode mode = ThinMode::Apriori;
  Tower tower;
  std::vector<std::size_t> indices;  // n_0 = 0 < n_1 < ...
  std::vector<ThinLevelInfo> info;   // levels 1..depth
};

namespace detail {
inline Int int_pow(std::uint64_t base, std::size_t e) {
  Int v = 1;
  for (std::size_t i = 0; i < e; ++i) v *= base;
  return v;
}

inline Tower build_generated(const GeneratorSpec& gen, const std::vector<std::size_t>& ns,
                             const TowerLimits& limits) {
  std::vector<std::uint32_t> exps(ns.begin(), ns.end());
  return gen.kind == GroupKind::Cyclic ? make_cyclic_tower(gen.base, exps, limits)
                                       : make_product_tower(gen.base, exps, limits);
}
}  // namespace detail

// Picks tower indices for the given generator so that each level is thin:
// |B_i^i| i^2 <= m_i.  Apriori mode sizes fibers against the worst-case
// chain bound before looking at any element; exact mode measures |B_i^i| on
// each candidate level and takes the first index that fits.  Both raise
// GeneratorExhausted when the next level would overrun the order cap.
inline ThinResult thin_tower(const GeneratorSpec& gen, std::size_t depth, ThinMode mode,
                             const TowerLimits& limits = {}) {
  Int cap = limits.max_order;
  std::vector<std::size_t> ns = {0};
  for (std::size_t i = 1; i <= depth; ++i) {
    if (mode == ThinMode::Apriori) {
      Int c = detail::int_pow(gen.base, ns[i - 1]);
      Int required = apriori_bound(c, i) * Int(i) * Int(i);
      std::size_t delta = 1;
      Int ratio = gen.base;
      while (ratio < required) {
        ratio *= gen.base;
        ++delta;
      }
      std::size_t n = ns[i - 1] + delta;
      if (detail::int_pow(gen.base, n) > cap)
        throw GeneratorExhausted(
            "apriori thinning needs order " + detail::int_pow(gen.base, n).str() +
                " at level " + std::to_string(i) + ", above the cap " + cap.str(),
            i);
      ns.push_back(n);
    } else {
      bool found = false;
      for (std::size_t n = ns[i - 1] + 1; !found; ++n) {
        if (detail::int_pow(gen.base, n) > cap)
          throw GeneratorExhausted("exact thinning passed the order cap " + cap.str() +
                                       " at level " + std::to_string(i),
                                   i);
        auto cand_ns = ns;
        cand_ns.push_back(n);
        Tower cand = detail::build_generated(gen, cand_ns, limits);
        FiberEnumeration fe(cand);
        LevelSets ls = build_level_sets(cand, fe, i, i);
        std::uint64_t b = ls.B[i].size();
        if (b * i * i <= cand.m(i)) {
          ns.push_back(n);
          found = true;
        }
      }
    }
  }

  ThinResult res;
  res.generator = gen;
  res.mode = mode;
  res.indices = ns;
  res.tower = detail::build_generated(gen, ns, limits);
  FiberEnumeration fe(res.tower);
  for (std::size_t i = 1; i <= depth; ++i) {
    LevelSets ls = build_level_sets(res.tower, fe, i, i);
    ThinLevelInfo row;
    row.level = i;
    row.index = ns[i];
    row.order = res.tower.order(i);
    row.m = res.tower.m(i);
    row.b_top = ls.B[i].size();
    row.required = row.b_top * i * i;
    row.apriori_d = apriori_bound(detail::int_pow(gen.base, ns[i - 1]), i);
    row.apriori_required = row.apriori_d * Int(i) * Int(i);
    row.thinness_ok = row.required <= row.m;
    if (!row.thinness_ok)
      throw Error("thinning produced a non-thin level " + std::to_string(i));
    res.info.push_back(row);
  }
  return res;
}

}  // namespace smallgroup
