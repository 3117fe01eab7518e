#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include <smallgroup/coords.hpp>
#include <smallgroup/errors.hpp>
#include <smallgroup/game.hpp>
#include <smallgroup/group.hpp>
#include <smallgroup/level_sets.hpp>
#include <smallgroup/report.hpp>
#include <smallgroup/skeleton.hpp>
#include <smallgroup/torus.hpp>

namespace smallgroup {

// Published schema for the JSON report.  The `schema` subcommand prints this
// string; schema/report.schema.json ships the same bytes and a test pins the
// two together.
inline constexpr char kReportSchema[] = R"json({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "smallgroup-lab report",
  "type": "object",
  "required": ["tool", "scenario", "checks", "summary"],
  "additionalProperties": false,
  "properties": {
    "tool": {
      "type": "object",
      "required": ["name", "version"],
      "additionalProperties": false,
      "properties": {
        "name": {"const": "smallgroup-lab"},
        "version": {"type": "string"}
      }
    },
    "scenario": {
      "type": "object",
      "required": ["kind"],
      "properties": {
        "kind": {
          "enum": [
            "levelsets", "thin", "coords", "skeleton", "game", "demo",
            "torus", "full-profinite-pipeline", "full-torus-pipeline"
          ]
        }
      }
    },
    "rng": {
      "type": "object",
      "required": ["algorithm", "seed"],
      "additionalProperties": false,
      "properties": {
        "algorithm": {"const": "mt19937_64"},
        "seed": {"type": "integer", "minimum": 0}
      }
    },
    "checks": {
      "type": "array",
      "items": {"$ref": "#/definitions/check"}
    },
    "summary": {
      "type": "object",
      "required": ["total", "passed", "failed"],
      "additionalProperties": false,
      "properties": {
        "total": {"type": "integer", "minimum": 0},
        "passed": {"type": "integer", "minimum": 0},
        "failed": {"type": "integer", "minimum": 0}
      }
    }
  },
  "definitions": {
    "rational": {
      "type": "object",
      "required": ["num", "den"],
      "additionalProperties": false,
      "properties": {
        "num": {"type": "string", "pattern": "^-?[0-9]+$"},
        "den": {"type": "string", "pattern": "^[0-9]+$"}
      }
    },
    "check": {
      "type": "object",
      "required": ["name", "tag", "status"],
      "additionalProperties": false,
      "properties": {
        "name": {"type": "string", "minLength": 1},
        "tag": {
          "enum": [
            "Aszorz", "Ainv", "Amon", "Bszorz", "Binv", "Bmon", "BAof",
            "korl", "upb", "dkorl",
            "ee", "psidef", "ginverze", "halmos",
            "nullpullback", "kozt", "ffff", "rezid",
            "Dmon", "De", "suru", "szorzas", "inv", "mertek",
            "m0", "frakC", "kitolt", "egysegegyben", "tsor"
          ]
        },
        "status": {"enum": ["pass", "fail"]},
        "witness": {"type": "string"},
        "values": {
          "type": "object",
          "additionalProperties": {"$ref": "#/definitions/rational"}
        }
      }
    }
  }
}
)json";

struct ScenarioOptions {
  TowerLimits tower;
  TorusLimits torus;
  std::optional<std::uint64_t> seed;  // overrides the config's "seed" field
};

namespace detail {

// Worker cap: SMALLGROUP_LAB_THREADS wins, hardware concurrency otherwise.
inline unsigned scenario_threads() {
  if (const char* s = std::getenv("SMALLGROUP_LAB_THREADS")) {
    char* end = nullptr;
    unsigned long v = std::strtoul(s, &end, 10);
    if (end != s && *end == '\0' && v >= 1 && v <= 256)
      return static_cast<unsigned>(v);
  }
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : h;
}

// Runs fn(i) for i in [0, n).  fn must only write state owned by index i;
// callers collect results by index so record order stays deterministic.
template <typename Fn>
inline void parallel_for(std::size_t n, Fn&& fn) {
  std::size_t workers = std::min<std::size_t>(scenario_threads(), n);
  if (n <= 1 || workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> parts;
  parts.reserve(workers);
  for (std::size_t c = 0; c < workers; ++c) {
    std::size_t begin = n * c / workers;
    std::size_t end = n * (c + 1) / workers;
    parts.push_back(std::async(std::launch::async, [begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    }));
  }
  for (auto& p : parts) p.get();
}

inline void check_keys(const nlohmann::json& c,
                       std::initializer_list<const char*> allowed) {
  for (auto it = c.begin(); it != c.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown config key '" + it.key() + "'");
  }
}

inline const nlohmann::json& need(const nlohmann::json& c, const char* key) {
  if (!c.contains(key))
    throw ConfigError(std::string("config needs '") + key + "'");
  return c.at(key);
}

inline std::uint64_t as_u64(const nlohmann::json& v, const char* key) {
  if (v.is_number_integer() && v.get<std::int64_t>() < 0)
    throw ConfigError(std::string("'") + key + "' must be nonnegative");
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ConfigError(std::string("'") + key + "' must be an integer");
  return v.get<std::uint64_t>();
}

inline std::uint64_t get_u64(const nlohmann::json& c, const char* key,
                             std::uint64_t def) {
  return c.contains(key) ? as_u64(c.at(key), key) : def;
}

inline std::string get_str(const nlohmann::json& c, const char* key,
                           const std::string& def) {
  if (!c.contains(key)) return def;
  if (!c.at(key).is_string())
    throw ConfigError(std::string("'") + key + "' must be a string");
  return c.at(key).get<std::string>();
}

inline bool get_bool(const nlohmann::json& c, const char* key, bool def) {
  if (!c.contains(key)) return def;
  if (!c.at(key).is_boolean())
    throw ConfigError(std::string("'") + key + "' must be a boolean");
  return c.at(key).get<bool>();
}

inline nlohmann::ordered_json to_ordered(const nlohmann::json& j) {
  return nlohmann::ordered_json::parse(j.dump());
}

inline std::uint64_t scenario_seed(const nlohmann::json& c,
                                   const ScenarioOptions& o) {
  return o.seed ? *o.seed : get_u64(c, "seed", 0);
}

template <typename Seq>
inline std::string seq_str(const Seq& xs) {
  std::ostringstream os;
  os << "(";
  bool first = true;
  for (const auto& x : xs) {
    if (!first) os << ", ";
    first = false;
    os << static_cast<std::uint64_t>(x);
  }
  os << ")";
  return os.str();
}

inline CheckRecord rec(std::string name, std::string tag, bool pass,
                       std::string witness = "") {
  CheckRecord r;
  r.name = std::move(name);
  r.tag = std::move(tag);
  r.pass = pass;
  r.witness = std::move(witness);
  return r;
}

// Evenly spaced index subset, first and last always kept.  Deterministic so
// capped checks stay reproducible.
inline std::vector<std::uint64_t> strided_indices(std::uint64_t total,
                                                  std::uint64_t cap) {
  std::vector<std::uint64_t> out;
  if (total == 0) return out;
  if (cap == 0) cap = 1;
  if (total <= cap) {
    out.reserve(static_cast<std::size_t>(total));
    for (std::uint64_t i = 0; i < total; ++i) out.push_back(i);
    return out;
  }
  if (cap == 1) return {0};
  out.reserve(static_cast<std::size_t>(cap));
  for (std::uint64_t i = 0; i < cap; ++i)
    out.push_back(i * (total - 1) / (cap - 1));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::string generator_str(const GeneratorSpec& g) {
  const char* kind = g.kind == GroupKind::Cyclic ? "cyclic" : "product";
  return std::string(kind) + ":" + std::to_string(g.base);
}

inline ThinMode parse_thin_mode(const std::string& s) {
  if (s == "apriori") return ThinMode::Apriori;
  if (s == "exact") return ThinMode::Exact;
  throw ConfigError("mode must be 'apriori' or 'exact'");
}

// Tower source for scenarios that need one with exponents fixed up front:
// either an inline "tower" object or a "generator" string plus "exponents".
struct TowerInput {
  bool from_table = false;
  GeneratorSpec gen;
  nlohmann::json table;
  Tower tower;
};

inline TowerInput tower_input(const nlohmann::json& c,
                              const TowerLimits& limits) {
  TowerInput out;
  if (c.contains("tower")) {
    if (c.contains("generator") || c.contains("exponents"))
      throw ConfigError("give either 'tower' or 'generator', not both");
    out.from_table = true;
    out.table = c.at("tower");
    out.tower = tower_from_json(out.table, limits);
    return out;
  }
  if (!need(c, "generator").is_string())
    throw ConfigError("'generator' must be a string like 'cyclic:2'");
  out.gen = parse_generator(c.at("generator").get<std::string>());
  if (c.contains("exponents")) {
    if (!out.gen.exponents.empty())
      throw ConfigError("exponents given both inline and as a field");
    out.gen.exponents = c.at("exponents").get<std::vector<std::uint32_t>>();
  }
  out.tower = out.gen.build(limits);
  return out;
}

inline void echo_tower(nlohmann::ordered_json& s, const TowerInput& in) {
  if (in.from_table) {
    s["tower"] = to_ordered(in.table);
  } else {
    s["generator"] = generator_str(in.gen);
    s["exponents"] = in.gen.exponents;
  }
}

inline std::string word_str(const CoordinateWord& w) { return seq_str(w.k); }

inline std::string cell_str(const std::vector<std::uint32_t>& c) {
  return seq_str(c);
}

// ---- shared check emitters ------------------------------------------------

inline void emit_closure_checks(const Tower& t, const FiberEnumeration& fe,
                                std::size_t j_max,
                                std::vector<CheckRecord>& out) {
  std::size_t levels = t.depth() + 1;
  std::vector<std::vector<ClosureCheck>> results(levels);
  parallel_for(levels, [&](std::size_t i) {
    LevelSets ls = build_level_sets(t, fe, i, j_max);
    results[i] = verify_level_closure(t, fe, ls);
  });
  for (std::size_t i = 0; i < levels; ++i)
    for (const auto& cc : results[i])
      out.push_back(rec(cc.relation + " i=" + std::to_string(cc.level) +
                            " j=" + std::to_string(cc.j),
                        cc.tag, cc.ok));
}

inline void emit_thin_checks(const ThinResult& tr,
                             std::vector<CheckRecord>& out) {
  for (const auto& li : tr.info) {
    CheckRecord k = rec("thinning-bound i=" + std::to_string(li.level), "korl",
                        li.thinness_ok);
    k.values.emplace_back("chain_top", Rat(Int(li.b_top)));
    k.values.emplace_back("required", Rat(Int(li.required)));
    k.values.emplace_back("fiber", Rat(Int(li.m)));
    out.push_back(std::move(k));

    CheckRecord u = rec("chain-growth-bound i=" + std::to_string(li.level),
                        "upb", Int(li.b_top) <= li.apriori_d);
    u.values.emplace_back("chain_top", Rat(Int(li.b_top)));
    u.values.emplace_back("bound", Rat(li.apriori_d));
    out.push_back(std::move(u));
  }
  bool ascending = !tr.indices.empty() && tr.indices.front() == 0;
  for (std::size_t i = 1; ascending && i < tr.indices.size(); ++i)
    ascending = tr.indices[i - 1] < tr.indices[i];
  CheckRecord d =
      rec("selected-indices", "dkorl", ascending, seq_str(tr.indices));
  for (std::size_t i = 0; i < tr.indices.size(); ++i)
    d.values.emplace_back("n_" + std::to_string(i), Rat(Int(tr.indices[i])));
  out.push_back(std::move(d));
}

struct CoordCaps {
  std::uint64_t bijection_max = 1ull << 14;  // exhaustive round trip limit
  std::uint64_t spot_elements = 256;         // round-trip sample above that
  std::uint64_t pair_side = 20;              // ginverze pairs: side^2 products
  std::uint64_t inverse_cap = 256;
  std::uint64_t subset_budget = 1ull << 18;  // exhaustive pushforward limit
  std::uint64_t singleton_cap = 24;
};

inline void emit_coord_checks(const Tower& t, const FiberEnumeration& fe,
                              const CoordCaps& caps,
                              std::vector<CheckRecord>& out) {
  std::size_t levels = t.depth() + 1;
  std::vector<std::vector<CheckRecord>> per(levels);
  parallel_for(levels, [&](std::size_t i) {
    std::vector<CheckRecord>& recs = per[i];
    std::string at = " i=" + std::to_string(i);
    std::uint64_t n = t.order(i);

    CoordinateWord one = encode_element(t, fe, i, t.levels[i].identity());
    bool all_ones =
        std::all_of(one.k.begin(), one.k.end(),
                    [](std::uint64_t k) { return k == 1; });
    recs.push_back(rec("identity-word" + at, "ee", all_ones, word_str(one)));

    bool exhaustive = n <= caps.bijection_max;
    std::vector<std::uint64_t> elems =
        exhaustive ? strided_indices(n, n) : strided_indices(n, caps.spot_elements);
    std::set<std::vector<std::uint32_t>> words;
    bool round_trip = true;
    for (std::uint64_t g : elems) {
      CoordinateWord w = encode_element(t, fe, i, g);
      words.insert(w.k);
      auto thread = decode_word(t, fe, w);
      if (thread.size() != i + 1 || thread.back() != g) round_trip = false;
    }
    CheckRecord bij = rec(std::string(exhaustive ? "coordinate-bijection"
                                                 : "coordinate-round-trip") +
                              at,
                          "psidef",
                          round_trip && words.size() == elems.size());
    bij.values.emplace_back("elements", Rat(Int(elems.size())));
    recs.push_back(std::move(bij));

    if (exhaustive) {
      Rat each(Int(1), Int(n));
      bool measures = true;
      for (std::uint64_t g : elems)
        if (cylinder_measure(t, encode_element(t, fe, i, g)) != each)
          measures = false;
      CheckRecord part = rec("cylinder-partition" + at, "psidef",
                             measures && Rat(Int(n)) * each == Rat(1));
      part.values.emplace_back("cylinder_measure", each);
      part.values.emplace_back("total", Rat(1));
      recs.push_back(std::move(part));
    }

    std::vector<std::uint64_t> side = strided_indices(n, caps.pair_side);
    bool products = true;
    std::uint64_t pairs = 0;
    for (std::uint64_t g : side)
      for (std::uint64_t h : side) {
        ++pairs;
        CoordinateWord lhs = multiply_words(t, fe, encode_element(t, fe, i, g),
                                            encode_element(t, fe, i, h));
        if (lhs.k != encode_element(t, fe, i, t.levels[i].op(g, h)).k)
          products = false;
      }
    CheckRecord pr = rec("product-compatible" + at, "ginverze", products);
    pr.values.emplace_back("pairs", Rat(Int(pairs)));
    recs.push_back(std::move(pr));

    std::vector<std::uint64_t> invs = strided_indices(n, caps.inverse_cap);
    bool inverses = true;
    for (std::uint64_t g : invs) {
      CoordinateWord lhs = invert_word(t, fe, encode_element(t, fe, i, g));
      if (lhs.k != encode_element(t, fe, i, t.levels[i].inverse(g)).k)
        inverses = false;
    }
    CheckRecord ir = rec("inverse-compatible" + at, "ginverze", inverses);
    ir.values.emplace_back("elements", Rat(Int(invs.size())));
    recs.push_back(std::move(ir));
  });
  for (auto& v : per)
    for (auto& r : v) out.push_back(std::move(r));

  // Measure transport along the bonds, one record per level pair.
  for (std::size_t i = 0; i <= t.depth(); ++i) {
    std::uint64_t n = t.order(i);
    for (std::size_t j = i; j <= t.depth(); ++j) {
      std::vector<ElemSet> sets;
      bool exhaustive = n < 63 && (Int(1) << n) * Int(t.order(j)) <=
                                      Int(caps.subset_budget);
      if (exhaustive) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
          ElemSet x = ElemSet::empty(n, ElemSet::Rep::Dense);
          for (std::uint64_t g = 0; g < n; ++g)
            if (mask & (std::uint64_t(1) << g)) x.bits().insert(g);
          sets.push_back(std::move(x));
        }
      } else {
        sets.push_back(ElemSet::empty(n, ElemSet::Rep::Dense));
        sets.push_back(ElemSet::full(n, ElemSet::Rep::Dense));
        for (std::uint64_t g : strided_indices(n, caps.singleton_cap))
          sets.push_back(ElemSet::singleton(n, g, ElemSet::Rep::Dense));
        ElemSet evens = ElemSet::empty(n, ElemSet::Rep::Dense);
        for (std::uint64_t g = 0; g < n; g += 2) evens.bits().insert(g);
        sets.push_back(std::move(evens));
      }
      bool equal = true;
      for (const ElemSet& x : sets)
        if (!pushforward_check(t, i, j, x).equal) equal = false;
      CheckRecord h = rec("measure-transport i=" + std::to_string(i) +
                              " j=" + std::to_string(j),
                          "halmos", equal);
      h.values.emplace_back("sets", Rat(Int(sets.size())));
      out.push_back(std::move(h));
    }
  }
}

struct SkeletonCaps {
  std::uint64_t element_cap = 48;
  std::uint64_t pair_side = 16;
};

inline void emit_skeleton_checks(const LevelSetsBundle& b,
                                 const SkeletonCaps& caps,
                                 std::vector<CheckRecord>& out) {
  const Tower& t = b.tower();
  std::size_t depth = t.depth();

  auto witness_of = [&](std::uint64_t g) {
    WitnessedElement x;
    x.word = encode_element(t, b.fibers(), depth, g);
    x.n = 0;
    for (std::size_t i = 0; i <= depth; ++i)
      if (b.b_set(i, 0).contains(x.word.k[i] - 1)) x.levels.push_back(i);
    return x;
  };

  std::vector<std::uint64_t> side =
      strided_indices(t.order(depth), caps.pair_side);
  std::vector<WitnessedElement> xs;
  xs.reserve(side.size());
  for (std::uint64_t g : side) xs.push_back(witness_of(g));

  std::uint64_t pairs = 0, violations = 0;
  for (const auto& x : xs)
    for (const auto& y : xs) {
      ++pairs;
      try {
        witness_product(b, x, y);
      } catch (const WitnessViolation&) {
        ++violations;
      }
    }
  CheckRecord wp =
      rec("witness-products", "ginverze", pairs > 0 && violations == 0);
  wp.values.emplace_back("pairs", Rat(Int(pairs)));
  wp.values.emplace_back("violations", Rat(Int(violations)));
  out.push_back(std::move(wp));

  std::uint64_t singles = 0, inv_violations = 0;
  for (std::uint64_t g : strided_indices(t.order(depth), caps.element_cap)) {
    ++singles;
    try {
      witness_inverse(b, witness_of(g));
    } catch (const WitnessViolation&) {
      ++inv_violations;
    }
  }
  CheckRecord wi =
      rec("witness-inverses", "ginverze", singles > 0 && inv_violations == 0);
  wi.values.emplace_back("elements", Rat(Int(singles)));
  wi.values.emplace_back("violations", Rat(Int(inv_violations)));
  out.push_back(std::move(wi));

  // Tail events: exact measure against the reciprocal-square budget, then the
  // vanishing statement as the start level walks up.
  Rat final_exact, final_bound;
  bool vanishing = true;
  Rat prev_exact;
  bool have_prev = false;
  for (std::size_t n = 0; n <= depth; ++n) {
    for (std::size_t i0 = std::max<std::size_t>(n, 1); i0 <= depth; ++i0) {
      TailMeasure tm = tail_event_measure(b, n, i0, depth);
      CheckRecord k = rec("tail-measure n=" + std::to_string(n) +
                              " i0=" + std::to_string(i0),
                          "korl", tm.within_bound);
      k.values.emplace_back("exact", tm.exact);
      k.values.emplace_back("term_sum", tm.term_sum);
      k.values.emplace_back("budget", tm.reciprocal_bound);
      out.push_back(std::move(k));
      if (n == 0) {
        if (have_prev && tm.exact > prev_exact) vanishing = false;
        prev_exact = tm.exact;
        have_prev = true;
        if (i0 == depth) {
          final_exact = tm.exact;
          final_bound = tm.reciprocal_bound;
          if (!tm.within_bound) vanishing = false;
        }
      }
    }
  }
  CheckRecord np = rec("tail-vanishing", "nullpullback", vanishing);
  np.values.emplace_back("final_exact", final_exact);
  np.values.emplace_back("final_budget", final_bound);
  out.push_back(std::move(np));
}

inline std::string solution_str(const GameSolution& sol) {
  return "breakpoints " + seq_str(sol.breakpoints) + "; reply " +
         seq_str(sol.r);
}

// Dense family + solver + per-stage verification records.  Returns the
// solution when one was found.
inline std::optional<GameSolution> emit_game_checks(
    const ProductSpace& sp, const std::vector<DenseOpenSet>& sets,
    std::vector<CheckRecord>& out) {
  bool all_dense = true;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    CheckRecord d = rec("stage-set-dense k=" + std::to_string(k + 1), "kozt",
                        sets[k].is_dense());
    d.values.emplace_back("resolution", Rat(Int(sets[k].resolution())));
    d.values.emplace_back("cylinders", Rat(Int(sets[k].count())));
    all_dense = all_dense && d.pass;
    out.push_back(std::move(d));
  }
  if (!all_dense) {
    out.push_back(rec("solution-found", "kozt", false,
                      "family has a non-dense stage"));
    return std::nullopt;
  }
  GameSolution sol;
  try {
    sol = solve_game(sp, sets);
  } catch (const SpaceTooShallow& e) {
    out.push_back(rec("solution-found", "kozt", false, e.what()));
    return std::nullopt;
  }
  out.push_back(rec("solution-found", "kozt", true, solution_str(sol)));
  GameVerify gv = verify_game(sp, sets, sol);
  out.push_back(rec("solution-shape", "kozt", gv.shape_ok, solution_str(sol)));
  for (const auto& st : gv.stages)
    out.push_back(
        rec("stage-steered k=" + std::to_string(st.stage), "ffff", st.steered));
  return sol;
}

inline void emit_sample_checks(const ProductSpace& sp,
                               const std::vector<DenseOpenSet>& sets,
                               const GameSolution& sol, std::mt19937_64& rng,
                               std::size_t per_stage,
                               std::vector<CheckRecord>& out) {
  SampleVerify sv = sample_verify(sp, sets, sol, rng, per_stage);
  CheckRecord r = rec("sampled-agreeing-words", "ffff", sv.ok);
  r.values.emplace_back("samples", Rat(Int(sv.samples)));
  r.values.emplace_back("hits", Rat(Int(sv.hits)));
  out.push_back(std::move(r));
}

inline void emit_demo_checks(const LevelSetsBundle& b, const ProductSpace& sp,
                             const std::vector<DenseOpenSet>& sets,
                             const GameSolution& sol, Parity parity,
                             std::vector<CheckRecord>& out) {
  DemoResult d = demo_nonmeager(b, sp, sets, sol, parity);
  std::string at = std::string(" parity=") + parity_name(parity);
  out.push_back(rec("demo-base-membership" + at, "ffff",
                    d.base_membership_ok,
                    "word " + seq_str(d.word) + "; selected blocks " +
                        seq_str(d.selected)));
  out.push_back(rec("demo-in-all-stages" + at, "rezid",
                    d.member_stages.size() == sets.size(),
                    "member stages " + seq_str(d.member_stages)));
  out.push_back(rec("demo-steered-stages" + at, "ffff", d.ok,
                    "steered stages " + seq_str(d.steered_stages)));
}

// ---- torus emitters --------------------------------------------------------

inline void emit_torus_build_checks(const ChartAtlas& atlas,
                                    const CubeFamilySet& fam,
                                    std::vector<CheckRecord>& out) {
  TorusPoint identity(atlas.dimension, Rat(0));
  out.push_back(rec("identity-chart-interior", "egysegegyben",
                    atlas.charts.at(0).contains_interior(identity),
                    "chart 0 holds the identity strictly inside"));
  std::map<std::string, std::size_t> charts_seen;
  for (const auto& cc : verify_cube_families(atlas, fam)) {
    std::string name = cc.name + " i=" + std::to_string(cc.stage);
    if (cc.tag == "mertek") {
      std::size_t r = charts_seen[name]++;
      name += " chart=" + std::to_string(r);
    } else if (cc.family >= 0) {
      name += " j=" + std::to_string(cc.family);
    }
    CheckRecord r = rec(std::move(name), cc.tag, cc.pass, cc.detail);
    r.values = cc.values;
    out.push_back(std::move(r));
  }
}

inline void emit_cube_space_checks(const CubeFamilySet& fam,
                                   const CubeGameSpace& gs,
                                   std::vector<CheckRecord>& out) {
  std::uint32_t d = fam.atlas.dimension;
  out.push_back(rec("root-level-trivial", "m0", gs.space.m.at(0) == 1,
                    "branching " + seq_str(gs.space.m) + "; resolutions " +
                        seq_str(fam.m)));
  for (std::size_t k = 1; k < gs.space.m.size(); ++k) {
    std::uint64_t step = (fam.m[k] - fam.m[k - 1]) * std::uint64_t(d);
    CheckRecord fr = rec("branching-matches-subdivision k=" +
                             std::to_string(k),
                         "frakC",
                         Int(gs.space.m[k]) == (Int(1) << step));
    fr.values.emplace_back("branching", Rat(Int(gs.space.m[k])));
    out.push_back(std::move(fr));

    Rat child = Rat(1) / Rat(Int(1) << (std::uint64_t(fam.m[k]) * d));
    Rat parent = Rat(1) / Rat(Int(1) << (std::uint64_t(fam.m[k - 1]) * d));
    CheckRecord ti = rec("children-tile-parent k=" + std::to_string(k),
                         "kitolt",
                         Rat(Int(gs.space.m[k])) * child == parent);
    ti.values.emplace_back("child_volume", child);
    ti.values.emplace_back("parent_volume", parent);
    out.push_back(std::move(ti));
  }

  std::uint64_t top_bits = std::uint64_t(fam.m.back()) * d;
  if (top_bits <= 16) {
    bool ok = true;
    std::uint64_t total = std::uint64_t(1) << top_bits;
    std::size_t level = fam.m.size() - 1;
    for (std::uint64_t v = 0; v < total && ok; ++v) {
      std::vector<std::uint32_t> cell(d);
      for (std::uint32_t a = 0; a < d; ++a)
        cell[a] = static_cast<std::uint32_t>(
            (v >> (std::uint64_t(fam.m.back()) * a)) &
            ((std::uint64_t(1) << fam.m.back()) - 1));
      if (gs.cube_of(gs.word_of(cell, level)) != cell) ok = false;
    }
    CheckRecord bj = rec("labels-bijective", "kitolt", ok);
    bj.values.emplace_back("cubes", Rat(Int(total)));
    out.push_back(std::move(bj));
  }
}

inline std::vector<DenseOpenSet> base_family_sets(const CubeFamilySet& fam,
                                                  const CubeGameSpace& gs) {
  std::vector<DenseOpenSet> sets;
  for (std::uint32_t i = 1; i <= fam.depth; ++i) {
    DenseOpenSet s(gs.space, i + 1);
    for (const auto& cube : fam.stage(i).families[0].cubes)
      s.add_prefix(gs.word_of(cube, i));
    sets.push_back(std::move(s));
  }
  return sets;
}

inline void emit_torus_demo_checks(const CubeFamilySet& fam,
                                   const CubeGameSpace& gs,
                                   const std::vector<DenseOpenSet>& sets,
                                   const GameSolution& sol, Parity parity,
                                   std::vector<CheckRecord>& out) {
  TorusDemoResult d = torus_demo(fam, gs, sets, sol, parity);
  std::string at = std::string(" parity=") + parity_name(parity);
  out.push_back(rec("cube-demo-base" + at, "tsor", d.seed_membership_ok,
                    "word " + seq_str(d.word) + "; top cube " +
                        cell_str(d.cubes.back())));
  out.push_back(rec("cube-demo-steered" + at, "tsor", d.ok,
                    "steered stages " + seq_str(d.steered_stages) +
                        "; member stages " + seq_str(d.member_stages)));
}

// Atlas from a config value: a builtin name or an inline atlas object.
inline ChartAtlas atlas_from_config(const nlohmann::json& v) {
  if (v.is_string()) return ChartAtlas::builtin(v.get<std::string>());
  if (v.is_object()) return ChartAtlas::from_json(v);
  throw ConfigError("'atlas' must be a builtin name or an atlas object");
}

}  // namespace detail

// ---- scenario runners -------------------------------------------------------

inline void scenario_levelsets(const nlohmann::json& c,
                               const ScenarioOptions& o, Report& rep) {
  detail::check_keys(c, {"kind", "generator", "exponents", "tower", "j_max",
                         "seed"});
  detail::TowerInput in = detail::tower_input(c, o.tower);
  std::size_t j_max = detail::get_u64(c, "j_max", in.tower.depth());
  if (j_max == 0) throw ConfigError("'j_max' must be >= 1");
  rep.scenario["kind"] = "levelsets";
  detail::echo_tower(rep.scenario, in);
  rep.scenario["j_max"] = j_max;

  FiberEnumeration fe(in.tower);
  detail::emit_closure_checks(in.tower, fe, j_max, rep.checks);
}

inline void scenario_thin(const nlohmann::json& c, const ScenarioOptions& o,
                          Report& rep) {
  detail::check_keys(c, {"kind", "generator", "depth", "mode", "seed"});
  GeneratorSpec gen =
      parse_generator(detail::need(c, "generator").get<std::string>());
  if (!gen.exponents.empty())
    throw ConfigError("thinning picks the exponents; give a bare generator");
  std::size_t depth = detail::as_u64(detail::need(c, "depth"), "depth");
  if (depth == 0) throw ConfigError("'depth' must be >= 1");
  ThinMode mode = detail::parse_thin_mode(detail::get_str(c, "mode", "exact"));
  rep.scenario["kind"] = "thin";
  rep.scenario["generator"] = detail::generator_str(gen);
  rep.scenario["depth"] = depth;
  rep.scenario["mode"] = thin_mode_name(mode);

  ThinResult tr = thin_tower(gen, depth, mode, o.tower);
  detail::emit_thin_checks(tr, rep.checks);
}

inline void scenario_coords(const nlohmann::json& c, const ScenarioOptions& o,
                            Report& rep) {
  detail::check_keys(c, {"kind", "generator", "exponents", "tower", "seed"});
  detail::TowerInput in = detail::tower_input(c, o.tower);
  rep.scenario["kind"] = "coords";
  detail::echo_tower(rep.scenario, in);

  FiberEnumeration fe(in.tower);
  detail::emit_coord_checks(in.tower, fe, detail::CoordCaps{}, rep.checks);
}

inline void scenario_skeleton(const nlohmann::json& c,
                              const ScenarioOptions& o, Report& rep) {
  detail::check_keys(c, {"kind", "generator", "exponents", "tower", "depth",
                         "mode", "seed"});
  rep.scenario["kind"] = "skeleton";
  Tower tower;
  if (c.contains("tower") || c.contains("exponents")) {
    detail::TowerInput in = detail::tower_input(c, o.tower);
    detail::echo_tower(rep.scenario, in);
    tower = std::move(in.tower);
  } else {
    GeneratorSpec gen =
        parse_generator(detail::need(c, "generator").get<std::string>());
    if (!gen.exponents.empty()) {
      rep.scenario["generator"] = detail::generator_str(gen);
      rep.scenario["exponents"] = gen.exponents;
      tower = gen.build(o.tower);
    } else {
      std::size_t depth = detail::as_u64(detail::need(c, "depth"), "depth");
      if (depth == 0) throw ConfigError("'depth' must be >= 1");
      ThinMode mode =
          detail::parse_thin_mode(detail::get_str(c, "mode", "exact"));
      rep.scenario["generator"] = detail::generator_str(gen);
      rep.scenario["depth"] = depth;
      rep.scenario["mode"] = thin_mode_name(mode);
      tower = thin_tower(gen, depth, mode, o.tower).tower;
    }
  }

  LevelSetsBundle b = LevelSetsBundle::build(tower, tower.depth());
  detail::emit_skeleton_checks(b, detail::SkeletonCaps{}, rep.checks);
}

inline void scenario_game(const nlohmann::json& c, const ScenarioOptions& o,
                          Report& rep) {
  detail::check_keys(c, {"kind", "space", "dense", "stages", "samples",
                         "include_one", "seed"});
  std::vector<std::uint64_t> sizes =
      detail::need(c, "space").get<std::vector<std::uint64_t>>();
  ProductSpace sp = ProductSpace::from_sizes(sizes);
  std::size_t samples = detail::get_u64(c, "samples", 200);
  rep.scenario["kind"] = "game";
  rep.scenario["space"] = sizes;

  std::mt19937_64 rng(rep.seed);
  std::vector<DenseOpenSet> sets;
  if (c.contains("dense")) {
    if (c.contains("stages") || c.contains("include_one"))
      throw ConfigError("give either 'dense' or window parameters, not both");
    sets = dense_sets_from_json(sp, c.at("dense"));
    rep.scenario["dense"] = detail::to_ordered(c.at("dense"));
  } else {
    std::size_t eligible = 0;
    for (std::uint64_t m : sp.m) eligible += m >= 2 ? 1 : 0;
    std::size_t stages =
        detail::get_u64(c, "stages", std::min<std::size_t>(2, eligible));
    bool include_one = detail::get_bool(c, "include_one", false);
    WindowFamily wf = make_window_family(sp, stages, rng, include_one);
    rep.has_rng = true;
    rep.scenario["stages"] = stages;
    rep.scenario["include_one"] = include_one;
    sets = std::move(wf.sets);
  }
  rep.scenario["samples"] = samples;

  auto sol = detail::emit_game_checks(sp, sets, rep.checks);
  if (sol && samples > 0) {
    rep.has_rng = true;
    detail::emit_sample_checks(sp, sets, *sol, rng, samples, rep.checks);
  }
}

inline void scenario_demo(const nlohmann::json& c, const ScenarioOptions& o,
                          Report& rep) {
  detail::check_keys(c, {"kind", "generator", "depth", "mode", "stages",
                         "samples", "parity", "seed"});
  GeneratorSpec gen =
      parse_generator(detail::need(c, "generator").get<std::string>());
  if (!gen.exponents.empty())
    throw ConfigError("the demo thins its own tower; give a bare generator");
  std::size_t depth = detail::as_u64(detail::need(c, "depth"), "depth");
  if (depth == 0) throw ConfigError("'depth' must be >= 1");
  ThinMode mode = detail::parse_thin_mode(detail::get_str(c, "mode", "exact"));
  std::string parity = detail::get_str(c, "parity", "both");
  if (parity != "both" && parity != "even" && parity != "odd")
    throw ConfigError("'parity' must be 'both', 'even' or 'odd'");
  std::size_t samples = detail::get_u64(c, "samples", 200);

  ThinResult tr = thin_tower(gen, depth, mode, o.tower);
  ProductSpace sp = ProductSpace::from_tower(tr.tower);
  std::size_t eligible = 0;
  for (std::uint64_t m : sp.m) eligible += m >= 2 ? 1 : 0;
  std::size_t stages =
      detail::get_u64(c, "stages", std::min<std::size_t>(3, eligible));

  rep.scenario["kind"] = "demo";
  rep.scenario["generator"] = detail::generator_str(gen);
  rep.scenario["depth"] = depth;
  rep.scenario["mode"] = thin_mode_name(mode);
  rep.scenario["stages"] = stages;
  rep.scenario["samples"] = samples;
  rep.scenario["parity"] = parity;

  std::mt19937_64 rng(rep.seed);
  WindowFamily wf = make_window_family(sp, stages, rng, true);
  rep.has_rng = true;

  LevelSetsBundle b = LevelSetsBundle::build(tr.tower, tr.tower.depth());
  auto sol = detail::emit_game_checks(sp, wf.sets, rep.checks);
  if (!sol) return;
  if (samples > 0)
    detail::emit_sample_checks(sp, wf.sets, *sol, rng, samples, rep.checks);
  if (parity == "both" || parity == "even")
    detail::emit_demo_checks(b, sp, wf.sets, *sol, Parity::Even, rep.checks);
  if (parity == "both" || parity == "odd")
    detail::emit_demo_checks(b, sp, wf.sets, *sol, Parity::Odd, rep.checks);
}

inline void scenario_torus(const nlohmann::json& c, const ScenarioOptions& o,
                           Report& rep) {
  detail::check_keys(c, {"kind", "dim", "atlas", "depth", "seed"});
  ChartAtlas atlas = detail::atlas_from_config(
      c.contains("atlas") ? c.at("atlas") : nlohmann::json("two-arcs"));
  if (c.contains("dim") &&
      detail::as_u64(c.at("dim"), "dim") != atlas.dimension)
    throw ConfigError("'dim' does not match the atlas dimension");
  std::size_t depth =
      detail::get_u64(c, "depth", default_depth_cap(atlas.dimension));

  rep.scenario["kind"] = "torus";
  rep.scenario["atlas"] = c.contains("atlas") && c.at("atlas").is_object()
                              ? detail::to_ordered(c.at("atlas"))
                              : nlohmann::ordered_json(atlas.name);
  rep.scenario["dim"] = atlas.dimension;
  rep.scenario["depth"] = depth;

  CubeFamilySet fam = build_cube_families(atlas, depth, o.torus);
  detail::emit_torus_build_checks(atlas, fam, rep.checks);
  CubeGameSpace gs = cube_game_space(fam);
  detail::emit_cube_space_checks(fam, gs, rep.checks);
}

inline void scenario_profinite_pipeline(const nlohmann::json& c,
                                        const ScenarioOptions& o,
                                        Report& rep) {
  detail::check_keys(c, {"kind", "generator", "depth", "mode", "stages",
                         "samples", "seed"});
  GeneratorSpec gen =
      parse_generator(detail::get_str(c, "generator", "cyclic:2"));
  if (!gen.exponents.empty())
    throw ConfigError("the pipeline thins its own tower; give a bare generator");
  std::size_t depth = detail::get_u64(c, "depth", 3);
  if (depth == 0) throw ConfigError("'depth' must be >= 1");
  ThinMode mode = detail::parse_thin_mode(detail::get_str(c, "mode", "exact"));
  std::size_t samples = detail::get_u64(c, "samples", 100);

  ThinResult tr = thin_tower(gen, depth, mode, o.tower);
  ProductSpace sp = ProductSpace::from_tower(tr.tower);
  std::size_t eligible = 0;
  for (std::uint64_t m : sp.m) eligible += m >= 2 ? 1 : 0;
  std::size_t stages =
      detail::get_u64(c, "stages", std::min<std::size_t>(3, eligible));

  rep.scenario["kind"] = "full-profinite-pipeline";
  rep.scenario["generator"] = detail::generator_str(gen);
  rep.scenario["depth"] = depth;
  rep.scenario["mode"] = thin_mode_name(mode);
  rep.scenario["stages"] = stages;
  rep.scenario["samples"] = samples;

  detail::emit_thin_checks(tr, rep.checks);

  FiberEnumeration fe(tr.tower);
  detail::emit_closure_checks(tr.tower, fe, depth, rep.checks);
  detail::emit_coord_checks(tr.tower, fe, detail::CoordCaps{}, rep.checks);

  LevelSetsBundle b = LevelSetsBundle::build(tr.tower, depth);
  detail::emit_skeleton_checks(b, detail::SkeletonCaps{}, rep.checks);

  std::mt19937_64 rng(rep.seed);
  WindowFamily wf = make_window_family(sp, stages, rng, true);
  rep.has_rng = true;
  auto sol = detail::emit_game_checks(sp, wf.sets, rep.checks);
  if (!sol) return;
  if (samples > 0)
    detail::emit_sample_checks(sp, wf.sets, *sol, rng, samples, rep.checks);
  detail::emit_demo_checks(b, sp, wf.sets, *sol, Parity::Even, rep.checks);
  detail::emit_demo_checks(b, sp, wf.sets, *sol, Parity::Odd, rep.checks);
}

inline void scenario_torus_pipeline(const nlohmann::json& c,
                                    const ScenarioOptions& o, Report& rep) {
  detail::check_keys(c, {"kind", "dim", "atlas", "depth", "seed"});
  ChartAtlas atlas = detail::atlas_from_config(
      c.contains("atlas") ? c.at("atlas") : nlohmann::json("two-arcs"));
  if (c.contains("dim") &&
      detail::as_u64(c.at("dim"), "dim") != atlas.dimension)
    throw ConfigError("'dim' does not match the atlas dimension");
  std::size_t depth =
      detail::get_u64(c, "depth", default_depth_cap(atlas.dimension));

  rep.scenario["kind"] = "full-torus-pipeline";
  rep.scenario["atlas"] = c.contains("atlas") && c.at("atlas").is_object()
                              ? detail::to_ordered(c.at("atlas"))
                              : nlohmann::ordered_json(atlas.name);
  rep.scenario["dim"] = atlas.dimension;
  rep.scenario["depth"] = depth;

  CubeFamilySet fam = build_cube_families(atlas, depth, o.torus);
  detail::emit_torus_build_checks(atlas, fam, rep.checks);
  CubeGameSpace gs = cube_game_space(fam);
  detail::emit_cube_space_checks(fam, gs, rep.checks);

  std::vector<DenseOpenSet> sets = detail::base_family_sets(fam, gs);
  auto sol = detail::emit_game_checks(gs.space, sets, rep.checks);
  if (!sol) return;
  detail::emit_torus_demo_checks(fam, gs, sets, *sol, Parity::Even,
                                 rep.checks);
  detail::emit_torus_demo_checks(fam, gs, sets, *sol, Parity::Odd,
                                 rep.checks);
}

inline Report run_scenario(const nlohmann::json& config,
                           const ScenarioOptions& opts = {}) {
  if (!config.is_object())
    throw ConfigError("scenario config must be a JSON object");
  if (!detail::need(config, "kind").is_string())
    throw ConfigError("'kind' must be a string");
  std::string kind = config.at("kind").get<std::string>();
  Report rep;
  rep.seed = detail::scenario_seed(config, opts);
  if (kind == "levelsets")
    scenario_levelsets(config, opts, rep);
  else if (kind == "thin")
    scenario_thin(config, opts, rep);
  else if (kind == "coords")
    scenario_coords(config, opts, rep);
  else if (kind == "skeleton")
    scenario_skeleton(config, opts, rep);
  else if (kind == "game")
    scenario_game(config, opts, rep);
  else if (kind == "demo")
    scenario_demo(config, opts, rep);
  else if (kind == "torus")
    scenario_torus(config, opts, rep);
  else if (kind == "full-profinite-pipeline")
    scenario_profinite_pipeline(config, opts, rep);
  else if (kind == "full-torus-pipeline")
    scenario_torus_pipeline(config, opts, rep);
  else
    throw ConfigError("unknown scenario kind '" + kind + "'");
  return rep;
}

}  // namespace smallgroup
