#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smallgroup/errors.hpp"
#include "smallgroup/util.hpp"

namespace smallgroup {

enum class GroupKind { Table, Cyclic, Product };
enum class Validation { Full, Trusted };

// Table groups are capped so element indices fit in 32 bits and the
// associativity scan stays tractable.
inline constexpr std::uint64_t kMaxTableOrder = 1ull << 16;

// Collects every violated axiom with witnesses instead of stopping at the
// first; associativity is only scanned at Validation::Full (cubic).
// Witness layout: NonClosure {row, col}; NoIdentity {}; NoInverse {element};
// NonAssociative {a, b, c}.
inline std::vector<GroupViolation> check_table(
    const std::vector<std::vector<std::uint64_t>>& rows, Validation level) {
  constexpr std::size_t kWitnessCap = 16;
  const std::size_t n = rows.size();
  if (n == 0) throw ConfigError("group table is empty");
  if (n > kMaxTableOrder) throw ConfigError("group table order exceeds 2^16");
  for (const auto& row : rows)
    if (row.size() != n) throw ConfigError("group table is not square");

  std::vector<GroupViolation> out;
  std::size_t closure_bad = 0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (rows[r][c] >= n && closure_bad++ < kWitnessCap)
        out.push_back({GroupViolationKind::NonClosure, {r, c}});
  if (closure_bad > 0) return out;  // later axioms need a closed table

  bool have_identity = false;
  std::size_t e = 0;
  for (std::size_t cand = 0; cand < n && !have_identity; ++cand) {
    bool ok = true;
    for (std::size_t x = 0; x < n && ok; ++x)
      ok = rows[cand][x] == x && rows[x][cand] == x;
    if (ok) {
      have_identity = true;
      e = cand;
    }
  }
  if (!have_identity) out.push_back({GroupViolationKind::NoIdentity, {}});

  if (have_identity) {
    std::size_t inv_bad = 0;
    for (std::size_t x = 0; x < n; ++x) {
      bool found = false;
      for (std::size_t y = 0; y < n && !found; ++y)
        found = rows[x][y] == e && rows[y][x] == e;
      if (!found && inv_bad++ < kWitnessCap)
        out.push_back({GroupViolationKind::NoInverse, {x}});
    }
  }

  if (level == Validation::Full) {
    std::size_t assoc_bad = 0;
    for (std::size_t a = 0; a < n && assoc_bad < kWitnessCap; ++a)
      for (std::size_t b = 0; b < n && assoc_bad < kWitnessCap; ++b)
        for (std::size_t c = 0; c < n && assoc_bad < kWitnessCap; ++c)
          if (rows[rows[a][b]][c] != rows[a][rows[b][c]]) {
            out.push_back({GroupViolationKind::NonAssociative, {a, b, c}});
            ++assoc_bad;
          }
  }
  return out;
}

inline const char* violation_name(GroupViolationKind k) {
  switch (k) {
    case GroupViolationKind::NonClosure: return "NonClosure";
    case GroupViolationKind::NoIdentity: return "NoIdentity";
    case GroupViolationKind::NoInverse: return "NoInverse";
    case GroupViolationKind::NonAssociative: return "NonAssociative";
  }
  return "?";
}

// Finite group with identity element 0 for the closed-form kinds.
//   Cyclic:  Z/n, op = addition mod n.
//   Product: (Z/p)^k, elements are base-p digit strings read as integers,
//            op = digitwise addition mod p (XOR when p = 2).
//   Table:   explicit Cayley table, validated on construction.
class FiniteGroup {
 public:
  static FiniteGroup cyclic(std::uint64_t n) {
    if (n == 0) throw ConfigError("cyclic group of order 0");
    FiniteGroup g;
    g.kind_ = GroupKind::Cyclic;
    g.order_ = n;
    return g;
  }

  static FiniteGroup product(std::uint64_t p, std::uint32_t k) {
    if (p < 2 && k > 0) throw ConfigError("product group base must be >= 2");
    FiniteGroup g;
    g.kind_ = GroupKind::Product;
    g.base_ = p;
    g.arity_ = k;
    g.order_ = 1;
    for (std::uint32_t i = 0; i < k; ++i) {
      if (mul_overflows_u64(g.order_, p)) throw ConfigError("product group order overflows");
      g.order_ *= p;
    }
    return g;
  }

  static FiniteGroup from_table(const std::vector<std::vector<std::uint64_t>>& rows,
                                Validation level = Validation::Full) {
    auto violations = check_table(rows, level);
    if (!violations.empty()) {
      std::string msg = "group table violates:";
      for (const auto& v : violations) {
        msg += ' ';
        msg += violation_name(v.kind);
      }
      throw GroupValidationError(msg, std::move(violations));
    }
    FiniteGroup g;
    g.kind_ = GroupKind::Table;
    const std::size_t n = rows.size();
    g.order_ = n;
    g.table_.resize(n * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        g.table_[r * n + c] = static_cast<std::uint32_t>(rows[r][c]);
    for (std::size_t cand = 0; cand < n; ++cand) {
      bool ok = true;
      for (std::size_t x = 0; x < n && ok; ++x)
        ok = g.table_[cand * n + x] == x && g.table_[x * n + cand] == x;
      if (ok) {
        g.identity_ = cand;
        break;
      }
    }
    g.inverse_.resize(n);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        if (g.table_[x * n + y] == g.identity_ && g.table_[y * n + x] == g.identity_) {
          g.inverse_[x] = static_cast<std::uint32_t>(y);
          break;
        }
    return g;
  }

  GroupKind kind() const { return kind_; }
  std::uint64_t order() const { return order_; }
  std::uint64_t identity() const { return identity_; }
  std::uint64_t base() const { return base_; }
  std::uint32_t arity() const { return arity_; }

  std::uint64_t op(std::uint64_t x, std::uint64_t y) const {
    switch (kind_) {
      case GroupKind::Cyclic: {
        std::uint64_t s = x + y;  // orders stay below 2^63 by construction
        return s >= order_ ? s - order_ : s;
      }
      case GroupKind::Product: {
        if (base_ == 2) return x ^ y;
        std::uint64_t out = 0, pw = 1;
        for (std::uint32_t i = 0; i < arity_; ++i) {
          out += ((x % base_ + y % base_) % base_) * pw;
          x /= base_;
          y /= base_;
          pw *= base_;
        }
        return out;
      }
      case GroupKind::Table:
        return table_[x * order_ + y];
    }
    return 0;
  }

  std::uint64_t inverse(std::uint64_t x) const {
    switch (kind_) {
      case GroupKind::Cyclic:
        return x == 0 ? 0 : order_ - x;
      case GroupKind::Product: {
        if (base_ == 2) return x;
        std::uint64_t out = 0, pw = 1;
        for (std::uint32_t i = 0; i < arity_; ++i) {
          std::uint64_t d = x % base_;
          out += (d == 0 ? 0 : base_ - d) * pw;
          x /= base_;
          pw *= base_;
        }
        return out;
      }
      case GroupKind::Table:
        return inverse_[x];
    }
    return 0;
  }

 private:
  GroupKind kind_ = GroupKind::Cyclic;
  std::uint64_t order_ = 1;
  std::uint64_t identity_ = 0;
  std::uint64_t base_ = 0;   // Product only
  std::uint32_t arity_ = 0;  // Product only
  std::vector<std::uint32_t> table_;
  std::vector<std::uint32_t> inverse_;
};

// Surjective homomorphism onto the previous tower level.
//   Mod: x -> x % modulus   (cyclic towers)
//   Div: x -> x / divisor   (digit-string towers; drops low digits)
class SurjHom {
 public:
  enum class Kind { Mod, Div, Table };

  static SurjHom mod_bond(std::uint64_t modulus) {
    SurjHom h;
    h.kind_ = Kind::Mod;
    h.param_ = modulus;
    return h;
  }
  static SurjHom div_bond(std::uint64_t divisor) {
    SurjHom h;
    h.kind_ = Kind::Div;
    h.param_ = divisor;
    return h;
  }
  static SurjHom table_bond(std::vector<std::uint64_t> map) {
    SurjHom h;
    h.kind_ = Kind::Table;
    h.map_ = std::move(map);
    return h;
  }

  Kind kind() const { return kind_; }
  std::uint64_t param() const { return param_; }

  std::uint64_t operator()(std::uint64_t x) const {
    switch (kind_) {
      case Kind::Mod: return x % param_;
      case Kind::Div: return x / param_;
      case Kind::Table: return map_[x];
    }
    return 0;
  }

 private:
  Kind kind_ = Kind::Mod;
  std::uint64_t param_ = 1;
  std::vector<std::uint64_t> map_;
};

// Inverse system  G_0 <- G_1 <- ... <- G_N  with G_0 trivial and every
// fiber count m_i = |G_i| / |G_{i-1}| at least 2 for i >= 1 (m_0 = 1).
struct Tower {
  std::vector<FiniteGroup> levels;
  std::vector<SurjHom> bonds;  // bonds[i] maps levels[i+1] onto levels[i]

  std::size_t depth() const { return levels.size() - 1; }
  std::uint64_t order(std::size_t i) const { return levels[i].order(); }
  std::uint64_t m(std::size_t i) const {
    return i == 0 ? 1 : order(i) / order(i - 1);
  }

  std::uint64_t map_down(std::uint64_t x, std::size_t from, std::size_t to) const {
    for (std::size_t i = from; i > to; --i) x = bonds[i - 1](x);
    return x;
  }
};

// Structural validation; Validation::Full additionally scans the
// homomorphism law of table bonds over all pairs.
inline void validate_tower(const Tower& t, Validation level = Validation::Full) {
  if (t.levels.empty()) throw TowerError("tower has no levels");
  if (t.bonds.size() + 1 != t.levels.size())
    throw TowerError("tower needs exactly one bond per consecutive level pair");
  if (t.order(0) != 1) throw TowerError("level 0 must be the trivial group");
  for (std::size_t i = 1; i < t.levels.size(); ++i) {
    if (t.order(i) % t.order(i - 1) != 0)
      throw TowerError("level " + std::to_string(i) + " order not divisible by predecessor");
    if (t.m(i) < 2)
      throw TowerError("level " + std::to_string(i) + " has fiber count < 2");
  }
  for (std::size_t i = 0; i + 1 < t.levels.size(); ++i) {
    const auto& b = t.bonds[i];
    const auto& src = t.levels[i + 1];
    const auto& tgt = t.levels[i];
    if (b.kind() == SurjHom::Kind::Table) {
      std::vector<bool> hit(tgt.order(), false);
      std::size_t hits = 0;
      for (std::uint64_t x = 0; x < src.order(); ++x) {
        std::uint64_t y = b(x);
        if (y >= tgt.order())
          throw TowerError("bond " + std::to_string(i) + " maps outside its target");
        if (!hit[y]) {
          hit[y] = true;
          ++hits;
        }
      }
      if (hits != tgt.order())
        throw TowerError("bond " + std::to_string(i) + " is not surjective");
      if (b(src.identity()) != tgt.identity())
        throw TowerError("bond " + std::to_string(i) + " does not preserve identity");
      if (level == Validation::Full) {
        for (std::uint64_t x = 0; x < src.order(); ++x)
          for (std::uint64_t y = 0; y < src.order(); ++y)
            if (b(src.op(x, y)) != tgt.op(b(x), b(y)))
              throw TowerError("bond " + std::to_string(i) + " is not a homomorphism at (" +
                               std::to_string(x) + "," + std::to_string(y) + ")");
      }
    }
  }
}

struct TowerLimits {
  std::uint64_t max_order = 1ull << 20;
};

namespace detail {
inline std::uint64_t checked_pow(std::uint64_t p, std::uint32_t e, std::uint64_t cap,
                                 const char* what) {
  std::uint64_t v = 1;
  for (std::uint32_t i = 0; i < e; ++i) {
    if (mul_overflows_u64(v, p) || v * p > cap)
      throw ConfigError(std::string(what) + ": order " + std::to_string(p) + "^" +
                        std::to_string(e) + " exceeds the order cap " + std::to_string(cap));
    v *= p;
  }
  return v;
}

inline void check_exponents(const std::vector<std::uint32_t>& exps) {
  if (exps.empty()) throw ConfigError("tower needs at least one exponent");
  if (exps[0] != 0) throw ConfigError("tower exponents must start at 0 (trivial base level)");
  for (std::size_t i = 1; i < exps.size(); ++i)
    if (exps[i] <= exps[i - 1])
      throw ConfigError("tower exponents must be strictly increasing");
}
}  // namespace detail

inline Tower make_cyclic_tower(std::uint64_t base, const std::vector<std::uint32_t>& exps,
                               const TowerLimits& limits = {}) {
  if (base < 2) throw ConfigError("tower base must be >= 2");
  detail::check_exponents(exps);
  Tower t;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    std::uint64_t n = detail::checked_pow(base, exps[i], limits.max_order, "cyclic tower");
    t.levels.push_back(FiniteGroup::cyclic(n));
    if (i > 0) t.bonds.push_back(SurjHom::mod_bond(t.order(i - 1)));
  }
  validate_tower(t, Validation::Trusted);
  return t;
}

inline Tower make_product_tower(std::uint64_t base, const std::vector<std::uint32_t>& exps,
                                const TowerLimits& limits = {}) {
  if (base < 2) throw ConfigError("tower base must be >= 2");
  detail::check_exponents(exps);
  Tower t;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    detail::checked_pow(base, exps[i], limits.max_order, "product tower");
    t.levels.push_back(FiniteGroup::product(base, exps[i]));
    if (i > 0) {
      std::uint64_t div = t.order(i) / t.order(i - 1);
      t.bonds.push_back(SurjHom::div_bond(div));
    }
  }
  validate_tower(t, Validation::Trusted);
  return t;
}

// Generator spec strings: "cyclic:<base>" or "cyclic:<base>:<e0,e1,...>",
// same for "product:". Without exponents the caller (thinning) picks them.
struct GeneratorSpec {
  GroupKind kind = GroupKind::Cyclic;  // Cyclic or Product
  std::uint64_t base = 2;
  std::vector<std::uint32_t> exponents;  // may be empty

  Tower build(const TowerLimits& limits = {}) const {
    if (exponents.empty())
      throw ConfigError("generator spec has no exponents; use the thinning op to pick them");
    return kind == GroupKind::Cyclic ? make_cyclic_tower(base, exponents, limits)
                                     : make_product_tower(base, exponents, limits);
  }
};

inline GeneratorSpec parse_generator(const std::string& s) {
  auto parts = split(s, ':');
  if (parts.size() < 2 || parts.size() > 3)
    throw ConfigError("generator spec must be kind:base or kind:base:e0,e1,... ; got '" + s + "'");
  GeneratorSpec g;
  if (parts[0] == "cyclic")
    g.kind = GroupKind::Cyclic;
  else if (parts[0] == "product")
    g.kind = GroupKind::Product;
  else
    throw ConfigError("unknown generator kind '" + parts[0] + "' (want cyclic or product)");
  g.base = parse_u64(parts[1], "generator base");
  if (g.base < 2) throw ConfigError("generator base must be >= 2");
  if (parts.size() == 3) {
    for (auto e : parse_u64_list(parts[2], "generator exponent"))
      g.exponents.push_back(static_cast<std::uint32_t>(e));
    detail::check_exponents(g.exponents);
  }
  return g;
}

// JSON tower forms:
//   {"generator":"cyclic","base":2,"exponents":[0,1,3]}
//   {"levels":[{"table":[[0]]},...],"bonds":[[...],...]}
inline Tower tower_from_json(const nlohmann::json& j, const TowerLimits& limits = {},
                             Validation level = Validation::Full) {
  if (!j.is_object()) throw ConfigError("tower config must be a JSON object");
  if (j.contains("generator")) {
    GeneratorSpec g;
    std::string kind = j.at("generator").get<std::string>();
    if (kind == "cyclic")
      g.kind = GroupKind::Cyclic;
    else if (kind == "product")
      g.kind = GroupKind::Product;
    else
      throw ConfigError("unknown generator '" + kind + "'");
    g.base = j.at("base").get<std::uint64_t>();
    g.exponents = j.at("exponents").get<std::vector<std::uint32_t>>();
    detail::check_exponents(g.exponents);
    return g.build(limits);
  }
  if (!j.contains("levels")) throw ConfigError("tower config needs 'generator' or 'levels'");
  Tower t;
  for (const auto& lvl : j.at("levels")) {
    auto rows = lvl.at("table").get<std::vector<std::vector<std::uint64_t>>>();
    if (rows.size() > limits.max_order) throw ConfigError("tower level exceeds the order cap");
    t.levels.push_back(FiniteGroup::from_table(rows, level));
  }
  if (j.contains("bonds"))
    for (const auto& b : j.at("bonds"))
      t.bonds.push_back(SurjHom::table_bond(b.get<std::vector<std::uint64_t>>()));
  validate_tower(t, level);
  return t;
}

}  // namespace smallgroup
