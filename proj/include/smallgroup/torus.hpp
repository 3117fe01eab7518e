#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <smallgroup/errors.hpp>
#include <smallgroup/game.hpp>
#include <smallgroup/rational.hpp>

namespace smallgroup {

// Exact rational geometry on the additive d-torus.  Torus points are stored
// by their canonical representative in [0,1)^d; cube points live in the
// closed unit cube, where 0 and 1 are distinct (chart images care about the
// difference even though the underlying torus points coincide).
using TorusPoint = std::vector<Rat>;
using CubePoint = std::vector<Rat>;

inline Rat mod1(const Rat& x) {
  Int n = rat_num(x);
  Int d = rat_den(x);
  Int q = n / d;
  if (n < 0 && q * d != n) --q;
  return x - Rat(q);
}

// Circular interval; width 1 means the whole circle (start is then 0).
struct Arc {
  Rat start;
  Rat width;

  bool full() const { return width >= 1; }
  static Arc whole() { return {Rat(0), Rat(1)}; }
};

inline Arc arc_sum(const Arc& a, const Arc& b) {
  if (a.width + b.width >= 1) return Arc::whole();
  return {mod1(a.start + b.start), a.width + b.width};
}

inline Arc arc_negate(const Arc& a) {
  if (a.full()) return Arc::whole();
  return {mod1(-a.start - a.width), a.width};
}

struct TorusBox {
  std::vector<Arc> axes;
};

inline TorusBox box_sum(const TorusBox& a, const TorusBox& b) {
  TorusBox out;
  out.axes.reserve(a.axes.size());
  for (std::size_t i = 0; i < a.axes.size(); ++i)
    out.axes.push_back(arc_sum(a.axes[i], b.axes[i]));
  return out;
}

inline TorusBox box_negate(const TorusBox& a) {
  TorusBox out;
  out.axes.reserve(a.axes.size());
  for (const Arc& ax : a.axes) out.axes.push_back(arc_negate(ax));
  return out;
}

// Closed axis interval in the cube frame; lo == hi is a valid degenerate
// slice (chart sections can touch a domain on a single face).
struct Interval {
  Rat lo;
  Rat hi;
};

struct Box {
  std::vector<Interval> axes;
};

// One chart: a closed box on the torus (corner + edge per axis, lifted to
// [corner, corner+edge] in the reals) with an affine bijection onto the unit
// cube, phi(x)_a = scale_a * lift(x)_a + offset_a.  Edges stay strictly below
// 1 so the lift is unique and the map injective.
struct Chart {
  std::vector<Rat> corner;
  std::vector<Rat> edge;
  std::vector<Rat> scale;
  std::vector<Rat> offset;

  std::size_t dimension() const { return corner.size(); }

  static Chart canonical(std::vector<Rat> c, std::vector<Rat> e) {
    Chart ch;
    ch.corner = std::move(c);
    ch.edge = std::move(e);
    for (std::size_t a = 0; a < ch.corner.size(); ++a) {
      ch.corner[a] = mod1(ch.corner[a]);
      ch.scale.push_back(Rat(1) / ch.edge[a]);
      ch.offset.push_back(-ch.corner[a] / ch.edge[a]);
    }
    return ch;
  }

  bool contains(const TorusPoint& x) const {
    for (std::size_t a = 0; a < dimension(); ++a)
      if (mod1(x[a] - corner[a]) > edge[a]) return false;
    return true;
  }

  // Strict interior of the domain box, relative to the torus.
  bool contains_interior(const TorusPoint& x) const {
    for (std::size_t a = 0; a < dimension(); ++a) {
      Rat delta = mod1(x[a] - corner[a]);
      if (!(delta > 0 && delta < edge[a])) return false;
    }
    return true;
  }

  CubePoint to_cube(const TorusPoint& x) const {
    CubePoint u(dimension());
    for (std::size_t a = 0; a < dimension(); ++a) {
      Rat lift = corner[a] + mod1(x[a] - corner[a]);
      u[a] = scale[a] * lift + offset[a];
    }
    return u;
  }

  TorusPoint from_cube(const CubePoint& u) const {
    TorusPoint x(dimension());
    for (std::size_t a = 0; a < dimension(); ++a)
      x[a] = mod1((u[a] - offset[a]) / scale[a]);
    return x;
  }

  Rat volume() const {
    Rat v(1);
    for (const Rat& e : edge) v *= e;
    return v;
  }

  TorusBox preimage(const Box& b) const {
    TorusBox out;
    out.axes.resize(dimension());
    for (std::size_t a = 0; a < dimension(); ++a) {
      Rat p = (b.axes[a].lo - offset[a]) / scale[a];
      Rat q = (b.axes[a].hi - offset[a]) / scale[a];
      if (p > q) std::swap(p, q);
      out.axes[a] = Arc{mod1(p), q - p};
    }
    return out;
  }

  // Intersects a torus box with the chart domain and maps the pieces into
  // the cube frame.  Per axis the intersection has at most two lift pieces,
  // so the result is a product of at most 2^d boxes (possibly degenerate).
  std::vector<Box> sections(const TorusBox& tb) const {
    std::vector<std::vector<Interval>> pieces(dimension());
    for (std::size_t a = 0; a < dimension(); ++a) {
      std::vector<std::pair<Rat, Rat>> lifts;  // in [0, edge] lift coords
      if (tb.axes[a].full()) {
        lifts.emplace_back(Rat(0), edge[a]);
      } else {
        Rat delta = mod1(tb.axes[a].start - corner[a]);
        Rat w = tb.axes[a].width;
        const std::pair<Rat, Rat> cands[2] = {{delta, delta + w},
                                              {delta - 1, delta + w - 1}};
        for (const auto& cand : cands) {
          Rat lo = std::max(cand.first, Rat(0));
          Rat hi = std::min(cand.second, edge[a]);
          if (lo <= hi) lifts.emplace_back(lo, hi);
        }
      }
      for (const auto& lift : lifts) {
        Rat u = scale[a] * (corner[a] + lift.first) + offset[a];
        Rat v = scale[a] * (corner[a] + lift.second) + offset[a];
        if (u > v) std::swap(u, v);
        pieces[a].push_back(Interval{u, v});
      }
      if (pieces[a].empty()) return {};
    }
    std::vector<Box> out;
    std::vector<std::size_t> pick(dimension(), 0);
    while (true) {
      Box b;
      for (std::size_t a = 0; a < dimension(); ++a)
        b.axes.push_back(pieces[a][pick[a]]);
      out.push_back(std::move(b));
      std::size_t a = 0;
      while (a < dimension() && ++pick[a] == pieces[a].size()) pick[a++] = 0;
      if (a == dimension()) break;
    }
    return out;
  }

  void validate(std::size_t index) const {
    auto fail = [&](const std::string& why) {
      throw AtlasInvalid("chart " + std::to_string(index) + ": " + why);
    };
    if (corner.empty()) fail("empty dimension");
    if (edge.size() != corner.size() || scale.size() != corner.size() ||
        offset.size() != corner.size())
      fail("axis lists differ in length");
    for (std::size_t a = 0; a < dimension(); ++a) {
      if (!(corner[a] >= 0 && corner[a] < 1)) fail("corner outside [0,1)");
      if (!(edge[a] > 0 && edge[a] < 1)) fail("edge length outside (0,1)");
      Rat at_lo = scale[a] * corner[a] + offset[a];
      Rat at_hi = scale[a] * (corner[a] + edge[a]) + offset[a];
      bool forward = at_lo == 0 && at_hi == 1;
      bool reversed = at_lo == 1 && at_hi == 0;
      if (!forward && !reversed)
        fail("affine map does not carry the box onto the unit cube");
    }
  }
};

struct ChartAtlas {
  std::uint32_t dimension = 0;
  std::vector<Chart> charts;
  std::string name = "custom";

  // Construction level i routes points through charts 0..i; once the atlas
  // runs out, every chart participates.
  std::size_t used_at(std::uint32_t stage) const {
    return std::min<std::size_t>(stage + 1, charts.size());
  }

  void validate() const {
    if (dimension == 0) throw AtlasInvalid("dimension must be at least 1");
    if (charts.empty()) throw AtlasInvalid("atlas has no charts");
    for (std::size_t t = 0; t < charts.size(); ++t) {
      if (charts[t].dimension() != dimension)
        throw AtlasInvalid("chart " + std::to_string(t) +
                           ": dimension differs from the atlas");
      charts[t].validate(t);
    }
    TorusPoint identity(dimension, Rat(0));
    if (!charts[0].contains_interior(identity))
      throw AtlasInvalid("identity is not interior to chart 0");

    // Interior cover check on the boundary arrangement: per axis, collect
    // every chart endpoint and the midpoints between circularly consecutive
    // endpoints.  Within an arrangement cell each chart interior is all-or
    // -nothing, so these samples decide coverage exactly.
    std::vector<std::vector<Rat>> samples(dimension);
    for (std::uint32_t a = 0; a < dimension; ++a) {
      std::set<Rat> cuts;
      for (const Chart& ch : charts) {
        cuts.insert(mod1(ch.corner[a]));
        cuts.insert(mod1(ch.corner[a] + ch.edge[a]));
      }
      std::vector<Rat> sorted(cuts.begin(), cuts.end());
      for (std::size_t k = 0; k < sorted.size(); ++k) {
        Rat next = k + 1 < sorted.size() ? sorted[k + 1] : sorted[0] + 1;
        samples[a].push_back(sorted[k]);
        samples[a].push_back(mod1((sorted[k] + next) / 2));
      }
    }
    std::vector<std::size_t> pick(dimension, 0);
    while (true) {
      TorusPoint x(dimension);
      for (std::uint32_t a = 0; a < dimension; ++a) x[a] = samples[a][pick[a]];
      bool covered = false;
      for (const Chart& ch : charts)
        if (ch.contains_interior(x)) {
          covered = true;
          break;
        }
      if (!covered) {
        std::ostringstream os;
        os << "chart interiors do not cover the torus; uncovered point (";
        for (std::uint32_t a = 0; a < dimension; ++a)
          os << (a ? ", " : "") << rat_str(x[a]);
        os << ")";
        throw AtlasInvalid(os.str());
      }
      std::size_t a = 0;
      while (a < dimension && ++pick[a] == samples[a].size()) pick[a++] = 0;
      if (a == dimension) break;
    }
  }

  static ChartAtlas builtin(const std::string& which);
  static ChartAtlas from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

namespace detail {

// The four half-circle arcs: two half circles plus their quarter shifts, so
// every point of the circle is interior to one of them.
inline const std::vector<Rat>& arc_corners() {
  static const std::vector<Rat> corners = {Rat(3) / 4, Rat(1) / 4, Rat(0),
                                           Rat(1) / 2};
  return corners;
}

}  // namespace detail

inline ChartAtlas ChartAtlas::builtin(const std::string& which) {
  ChartAtlas atlas;
  if (which == "two-arcs") {
    atlas.dimension = 1;
    atlas.name = "builtin:two-arcs";
    for (const Rat& c : detail::arc_corners())
      atlas.charts.push_back(Chart::canonical({c}, {Rat(1) / 2}));
  } else if (which == "two-arcs-2d") {
    atlas.dimension = 2;
    atlas.name = "builtin:two-arcs-2d";
    const auto& corners = detail::arc_corners();
    for (const Rat& cx : corners)
      for (const Rat& cy : corners)
        atlas.charts.push_back(
            Chart::canonical({cx, cy}, {Rat(1) / 2, Rat(1) / 2}));
  } else {
    throw ConfigError("unknown builtin atlas: " + which);
  }
  atlas.validate();
  return atlas;
}

inline ChartAtlas ChartAtlas::from_json(const nlohmann::json& j) {
  ChartAtlas atlas;
  atlas.dimension = j.at("dimension").get<std::uint32_t>();
  if (j.contains("name")) atlas.name = j.at("name").get<std::string>();
  if (!j.contains("charts") || !j.at("charts").is_array())
    throw AtlasInvalid("atlas JSON needs a charts array");
  for (const auto& cj : j.at("charts")) {
    std::vector<Rat> corner, edge;
    for (const auto& v : cj.at("corner")) corner.push_back(mod1(rat_from_json(v)));
    for (const auto& v : cj.at("edges")) edge.push_back(rat_from_json(v));
    if (cj.contains("scale") || cj.contains("offset")) {
      Chart ch;
      ch.corner = corner;
      ch.edge = edge;
      for (const auto& v : cj.at("scale")) ch.scale.push_back(rat_from_json(v));
      for (const auto& v : cj.at("offset")) ch.offset.push_back(rat_from_json(v));
      atlas.charts.push_back(std::move(ch));
    } else {
      atlas.charts.push_back(Chart::canonical(corner, edge));
    }
  }
  atlas.validate();
  return atlas;
}

inline nlohmann::ordered_json ChartAtlas::to_json() const {
  nlohmann::ordered_json out;
  out["dimension"] = dimension;
  out["name"] = name;
  out["charts"] = nlohmann::ordered_json::array();
  for (const Chart& ch : charts) {
    nlohmann::ordered_json cj;
    auto rats = [](const std::vector<Rat>& v) {
      nlohmann::ordered_json a = nlohmann::ordered_json::array();
      for (const Rat& r : v) a.push_back(rat_str(r));
      return a;
    };
    cj["corner"] = rats(ch.corner);
    cj["edges"] = rats(ch.edge);
    cj["scale"] = rats(ch.scale);
    cj["offset"] = rats(ch.offset);
    out["charts"].push_back(std::move(cj));
  }
  return out;
}

// Set of closed dyadic cubes at one resolution, indexed per axis in
// [0, 2^resolution).
struct DyadicCubeSet {
  std::uint32_t resolution = 0;
  std::set<std::vector<std::uint32_t>> cubes;

  Rat volume(std::uint32_t d) const {
    Int cells = Int(1) << (static_cast<std::size_t>(resolution) * d);
    return Rat(Int(cubes.size())) / Rat(cells);
  }

  bool contains_point(const CubePoint& x) const {
    std::vector<std::vector<std::uint32_t>> cands(x.size());
    std::uint64_t n = std::uint64_t(1) << resolution;
    for (std::size_t a = 0; a < x.size(); ++a) {
      Rat v = x[a] * Rat(Int(n));
      Int num = rat_num(v), den = rat_den(v);
      if (den == 1) {
        std::uint64_t k = num.convert_to<std::uint64_t>();
        if (k > 0) cands[a].push_back(static_cast<std::uint32_t>(k - 1));
        if (k < n) cands[a].push_back(static_cast<std::uint32_t>(k));
      } else {
        Int fl = num / den;
        cands[a].push_back(fl.convert_to<std::uint32_t>());
      }
      if (cands[a].empty()) return false;
    }
    std::vector<std::size_t> pick(x.size(), 0);
    while (true) {
      std::vector<std::uint32_t> idx(x.size());
      for (std::size_t a = 0; a < x.size(); ++a) idx[a] = cands[a][pick[a]];
      if (cubes.count(idx)) return true;
      std::size_t a = 0;
      while (a < x.size() && ++pick[a] == cands[a].size()) pick[a++] = 0;
      if (a == x.size()) return false;
    }
  }

  DyadicCubeSet refined(std::uint32_t d, std::uint32_t to_res) const {
    DyadicCubeSet out;
    out.resolution = to_res;
    std::uint32_t shift = to_res - resolution;
    std::uint64_t children = std::uint64_t(1) << shift;
    for (const auto& cube : cubes) {
      std::vector<std::uint64_t> off(d, 0);
      while (true) {
        std::vector<std::uint32_t> idx(d);
        for (std::uint32_t a = 0; a < d; ++a)
          idx[a] = static_cast<std::uint32_t>(
              (std::uint64_t(cube[a]) << shift) + off[a]);
        out.cubes.insert(std::move(idx));
        std::uint32_t a = 0;
        while (a < d && ++off[a] == children) off[a++] = 0;
        if (a == d) break;
      }
    }
    return out;
  }

  // This set must be at the same or a finer resolution than the other.
  bool union_subset_of(const DyadicCubeSet& other) const {
    std::uint32_t shift = resolution - other.resolution;
    for (const auto& cube : cubes) {
      std::vector<std::uint32_t> anc(cube.size());
      for (std::size_t a = 0; a < cube.size(); ++a) anc[a] = cube[a] >> shift;
      if (!other.cubes.count(anc)) return false;
    }
    return true;
  }

  Box cube_box(const std::vector<std::uint32_t>& idx) const {
    Box b;
    Rat step = Rat(1) / Rat(Int(Int(1) << resolution));
    for (std::uint32_t k : idx)
      b.axes.push_back(Interval{Rat(k) * step, Rat(k + 1) * step});
    return b;
  }
};

// All cubes meeting the points; the points land in the relative interior of
// the union, and the cover has at most 2^d cubes per point.
inline DyadicCubeSet minimal_cover(const std::vector<CubePoint>& pts,
                                   std::uint32_t d, std::uint32_t res) {
  DyadicCubeSet out;
  out.resolution = res;
  std::uint64_t n = std::uint64_t(1) << res;
  for (const CubePoint& x : pts) {
    std::vector<std::vector<std::uint32_t>> cands(d);
    for (std::uint32_t a = 0; a < d; ++a) {
      Rat v = x[a] * Rat(Int(n));
      Int num = rat_num(v), den = rat_den(v);
      if (den == 1) {
        std::uint64_t k = num.convert_to<std::uint64_t>();
        if (k > 0) cands[a].push_back(static_cast<std::uint32_t>(k - 1));
        if (k < n) cands[a].push_back(static_cast<std::uint32_t>(k));
      } else {
        Int fl = num / den;
        cands[a].push_back(fl.convert_to<std::uint32_t>());
      }
    }
    std::vector<std::size_t> pick(d, 0);
    while (true) {
      std::vector<std::uint32_t> idx(d);
      for (std::uint32_t a = 0; a < d; ++a) idx[a] = cands[a][pick[a]];
      out.cubes.insert(std::move(idx));
      std::uint32_t a = 0;
      while (a < d && ++pick[a] == cands[a].size()) pick[a++] = 0;
      if (a == d) break;
    }
  }
  return out;
}

// Exact test for a closed box (degenerate axes allowed) sitting inside a
// union of closed cubes.  Active axes split into grid strips that must each
// be covered outright; a frozen axis on a grid line may lean on either
// neighboring cube.
inline bool box_within(const Box& b, const DyadicCubeSet& set, std::uint32_t d,
                       std::vector<std::uint32_t>* witness = nullptr) {
  std::uint64_t n = std::uint64_t(1) << set.resolution;
  std::vector<std::vector<std::uint32_t>> strips(d);
  std::vector<bool> frozen(d, false);
  for (std::uint32_t a = 0; a < d; ++a) {
    const Rat& lo = b.axes[a].lo;
    const Rat& hi = b.axes[a].hi;
    Rat vlo = lo * Rat(Int(n)), vhi = hi * Rat(Int(n));
    if (lo == hi) {
      frozen[a] = true;
      Int num = rat_num(vlo), den = rat_den(vlo);
      if (den == 1) {
        std::uint64_t k = num.convert_to<std::uint64_t>();
        if (k > 0) strips[a].push_back(static_cast<std::uint32_t>(k - 1));
        if (k < n) strips[a].push_back(static_cast<std::uint32_t>(k));
      } else {
        strips[a].push_back((rat_num(vlo) / rat_den(vlo)).convert_to<std::uint32_t>());
      }
      continue;
    }
    Int lo_num = rat_num(vlo), lo_den = rat_den(vlo);
    Int hi_num = rat_num(vhi), hi_den = rat_den(vhi);
    Int start = lo_den == 1 ? lo_num : Int(lo_num / lo_den);
    Int end = hi_den == 1 ? Int(hi_num - 1) : Int(hi_num / hi_den);
    for (Int k = start; k <= end; ++k)
      strips[a].push_back(k.convert_to<std::uint32_t>());
  }
  // Enumerate active-strip tuples; frozen axes get an any-of choice.
  std::vector<std::size_t> pick(d, 0);
  while (true) {
    bool covered = false;
    if (std::none_of(frozen.begin(), frozen.end(), [](bool f) { return f; })) {
      std::vector<std::uint32_t> idx(d);
      for (std::uint32_t a = 0; a < d; ++a) idx[a] = strips[a][pick[a]];
      covered = set.cubes.count(idx) != 0;
      if (!covered && witness) *witness = idx;
    } else {
      std::vector<std::size_t> fpick(d, 0);
      while (true) {
        std::vector<std::uint32_t> idx(d);
        for (std::uint32_t a = 0; a < d; ++a)
          idx[a] = frozen[a] ? strips[a][fpick[a]] : strips[a][pick[a]];
        if (set.cubes.count(idx)) {
          covered = true;
          break;
        }
        if (witness) *witness = idx;
        std::uint32_t a = 0;
        while (a < d && (!frozen[a] || ++fpick[a] == strips[a].size())) {
          if (frozen[a]) fpick[a] = 0;
          ++a;
        }
        if (a == d) break;
      }
    }
    if (!covered) return false;
    std::uint32_t a = 0;
    while (a < d) {
      if (frozen[a]) {
        ++a;
        continue;
      }
      if (++pick[a] < strips[a].size()) break;
      pick[a++] = 0;
    }
    if (a == d) return true;
  }
}

// One construction level: seed grids, their chart lifts, the backward cover
// chain at per-family resolutions, and the common-resolution families.
struct StageFamilies {
  std::uint32_t stage = 0;
  std::vector<std::vector<CubePoint>> seeds;   // A_j, j = 0..stage
  std::vector<std::vector<TorusPoint>> lifts;  // B_j
  std::vector<std::uint32_t> cover_res;        // per-family resolutions, descending in j
  std::vector<DyadicCubeSet> covers;           // cover chain at cover_res[j]
  std::uint32_t resolution = 0;                // common resolution (= cover_res[0])
  std::vector<DyadicCubeSet> families;         // families at the common resolution
};

struct CubeFamilySet {
  ChartAtlas atlas;
  std::uint32_t depth = 0;
  std::vector<std::uint32_t> m;  // size depth+1, m[0] = 0
  std::vector<StageFamilies> stages;

  const StageFamilies& stage(std::uint32_t i) const { return stages.at(i - 1); }
};

struct TorusLimits {
  std::uint32_t max_exponent = 16;  // dyadic subdivisions per axis capped at 2^this
  std::uint32_t max_depth = 0;      // 0 = per-dimension default (3 at d=1, 2 at d=2, else 1)
};

inline std::uint32_t default_depth_cap(std::uint32_t dimension) {
  if (dimension == 1) return 3;
  if (dimension == 2) return 2;
  return 1;
}

namespace detail {

inline std::string point_str(const CubePoint& x) {
  std::string s = "(";
  for (std::size_t a = 0; a < x.size(); ++a) {
    if (a) s += ", ";
    s += rat_str(x[a]);
  }
  return s + ")";
}

inline std::vector<TorusPoint> f_operation(const std::vector<TorusPoint>& h,
                                           std::uint32_t d) {
  std::set<TorusPoint> sym(h.begin(), h.end());
  for (const TorusPoint& x : h) {
    TorusPoint neg(d);
    for (std::uint32_t a = 0; a < d; ++a) neg[a] = mod1(-x[a]);
    sym.insert(std::move(neg));
  }
  std::set<TorusPoint> out;
  for (const TorusPoint& x : sym)
    for (const TorusPoint& y : sym) {
      TorusPoint s(d);
      for (std::uint32_t a = 0; a < d; ++a) s[a] = mod1(x[a] + y[a]);
      out.insert(std::move(s));
    }
  return {out.begin(), out.end()};
}

// Checks that products and inverses of the covered sets, routed through the
// first `used` charts, land inside the target union.
inline bool images_land_inside(const ChartAtlas& atlas, std::size_t used,
                               const DyadicCubeSet& source,
                               const DyadicCubeSet& target, std::uint32_t d,
                               std::string* failure = nullptr) {
  std::vector<std::vector<TorusBox>> pre(used);
  for (std::size_t r = 0; r < used; ++r)
    for (const auto& cube : source.cubes)
      pre[r].push_back(atlas.charts[r].preimage(source.cube_box(cube)));

  using Key = std::vector<std::pair<Rat, Rat>>;
  auto key_of = [d](const TorusBox& tb) {
    Key k;
    k.reserve(d);
    for (const Arc& a : tb.axes) k.emplace_back(a.start, a.width);
    return k;
  };
  std::set<Key> seen;
  std::vector<TorusBox> queue;
  for (std::size_t r = 0; r < used; ++r)
    for (std::size_t s = r; s < used; ++s)
      for (const TorusBox& b1 : pre[r])
        for (const TorusBox& b2 : pre[s]) {
          TorusBox sum = box_sum(b1, b2);
          if (seen.insert(key_of(sum)).second) queue.push_back(std::move(sum));
        }
  for (std::size_t r = 0; r < used; ++r)
    for (const TorusBox& b : pre[r]) {
      TorusBox neg = box_negate(b);
      if (seen.insert(key_of(neg)).second) queue.push_back(std::move(neg));
    }

  for (const TorusBox& tb : queue)
    for (std::size_t t = 0; t < used; ++t)
      for (const Box& piece : atlas.charts[t].sections(tb)) {
        std::vector<std::uint32_t> witness;
        if (!box_within(piece, target, d, &witness)) {
          if (failure) {
            std::ostringstream os;
            os << "image box through chart " << t << " escapes at cell (";
            for (std::size_t a = 0; a < witness.size(); ++a)
              os << (a ? "," : "") << witness[a];
            os << ")/" << (std::uint64_t(1) << target.resolution);
            *failure = os.str();
          }
          return false;
        }
      }
  return true;
}

}  // namespace detail

inline CubeFamilySet build_cube_families(const ChartAtlas& atlas,
                                         std::uint32_t depth,
                                         const TorusLimits& limits = {}) {
  atlas.validate();
  std::uint32_t d = atlas.dimension;
  std::uint32_t depth_cap =
      limits.max_depth ? limits.max_depth : default_depth_cap(d);
  if (depth == 0) throw ConfigError("construction depth must be at least 1");
  if (depth > depth_cap)
    throw ConfigError("construction depth " + std::to_string(depth) +
                      " exceeds the cap " + std::to_string(depth_cap) +
                      " for dimension " + std::to_string(d));
  if (limits.max_exponent > 31)
    throw ConfigError("subdivision exponent cap must stay below 32");
  std::uint32_t cap = limits.max_exponent;

  CubeFamilySet fam;
  fam.atlas = atlas;
  fam.depth = depth;
  fam.m.assign(1, 0);

  TorusPoint identity(d, Rat(0));
  for (std::uint32_t i = 1; i <= depth; ++i) {
    std::size_t used = atlas.used_at(i);
    std::uint32_t m_prev = fam.m.back();
    StageFamilies st;
    st.stage = i;

    // Seed grid: the chart-0 image of the identity translated across the
    // previous-resolution grid, kept inside the closed cube.
    CubePoint x0 = atlas.charts[0].to_cube(identity);
    Rat step = Rat(1) / Rat(Int(Int(1) << m_prev));
    std::vector<std::vector<Rat>> axis_vals(d);
    for (std::uint32_t a = 0; a < d; ++a) {
      Int t_min = -(rat_num(x0[a] / step) / rat_den(x0[a] / step));
      for (Int t = t_min;; ++t) {
        Rat v = x0[a] + Rat(t) * step;
        if (v < 0) continue;
        if (v > 1) break;
        axis_vals[a].push_back(v);
      }
    }
    std::set<CubePoint> a_cur;
    {
      std::vector<std::size_t> pick(d, 0);
      while (true) {
        CubePoint p(d);
        for (std::uint32_t a = 0; a < d; ++a) p[a] = axis_vals[a][pick[a]];
        a_cur.insert(std::move(p));
        std::uint32_t a = 0;
        while (a < d && ++pick[a] == axis_vals[a].size()) pick[a++] = 0;
        if (a == d) break;
      }
    }

    auto lift_of = [&](const std::set<CubePoint>& pts) {
      std::set<TorusPoint> out;
      for (std::size_t k = 0; k < used; ++k)
        for (const CubePoint& p : pts) out.insert(atlas.charts[k].from_cube(p));
      return out;
    };
    std::set<TorusPoint> b_cur = lift_of(a_cur);

    st.seeds.push_back({a_cur.begin(), a_cur.end()});
    st.lifts.push_back({b_cur.begin(), b_cur.end()});

    for (std::uint32_t j = 1; j <= i; ++j) {
      std::vector<TorusPoint> fb =
          detail::f_operation(st.lifts.back(), d);
      std::set<CubePoint> a_next;
      for (std::size_t k = 0; k < used; ++k)
        for (const TorusPoint& g : fb)
          if (atlas.charts[k].contains(g))
            a_next.insert(atlas.charts[k].to_cube(g));
      std::set<TorusPoint> b_next = lift_of(a_next);
      if (!std::includes(a_next.begin(), a_next.end(), a_cur.begin(),
                         a_cur.end()) ||
          !std::includes(b_next.begin(), b_next.end(), b_cur.begin(),
                         b_cur.end()) ||
          !b_next.count(identity))
        throw Error("seed iteration lost monotonicity; construction bug");
      a_cur = std::move(a_next);
      b_cur = std::move(b_next);
      st.seeds.push_back({a_cur.begin(), a_cur.end()});
      st.lifts.push_back({b_cur.begin(), b_cur.end()});
    }

    // Top cover: refine until every chart preimage of the cover has measure
    // at most 1/i^2, then take the finest requirement across charts.
    Rat budget = Rat(1) / Rat(Int(i) * Int(i));
    std::uint32_t l_top = m_prev + 1;
    for (std::size_t r = 0; r < used; ++r) {
      std::uint32_t k = 0;
      while (true) {
        if (k > cap)
          throw ResolutionCapExceeded(
              "per-chart cover measure does not reach 1/" +
                  std::to_string(std::uint64_t(i) * i) + " within 2^" +
                  std::to_string(cap) + " subdivisions",
              i, i);
        Rat measure = minimal_cover(st.seeds[i], d, k).volume(d) *
                      atlas.charts[r].volume();
        if (measure <= budget) break;
        ++k;
      }
      l_top = std::max(l_top, k);
    }
    if (l_top > cap)
      throw ResolutionCapExceeded(
          "level " + std::to_string(i) + " needs 2^" + std::to_string(l_top) +
              " subdivisions, beyond the cap 2^" + std::to_string(cap),
          i, i);

    st.cover_res.assign(i + 1, 0);
    st.covers.assign(i + 1, DyadicCubeSet{});
    st.cover_res[i] = l_top;
    st.covers[i] = minimal_cover(st.seeds[i], d, l_top);

    for (std::uint32_t j = i; j-- > 0;) {
      std::uint32_t p = st.cover_res[j + 1];
      std::string failure;
      while (true) {
        if (p > cap)
          throw ResolutionCapExceeded(
              "family " + std::to_string(j) + " at level " + std::to_string(i) +
                  " cannot satisfy the image inclusions within 2^" +
                  std::to_string(cap) + " subdivisions: " + failure,
              i, j);
        DyadicCubeSet cand = minimal_cover(st.seeds[j], d, p);
        if (detail::images_land_inside(atlas, used, cand, st.covers[j + 1], d,
                                       &failure)) {
          st.cover_res[j] = p;
          st.covers[j] = std::move(cand);
          break;
        }
        ++p;
      }
    }

    st.resolution = st.cover_res[0];
    for (std::uint32_t j = 0; j <= i; ++j)
      st.families.push_back(st.covers[j].resolution == st.resolution
                                ? st.covers[j]
                                : st.covers[j].refined(d, st.resolution));
    fam.m.push_back(st.resolution);
    fam.stages.push_back(std::move(st));
  }
  return fam;
}

struct ConditionCheck {
  std::string name;
  std::string tag;
  std::uint32_t stage = 0;
  std::int32_t family = -1;  // -1 when the check is not family-indexed
  bool pass = false;
  std::string detail;
  std::vector<std::pair<std::string, Rat>> values;
};

inline std::vector<ConditionCheck> verify_cube_families(
    const ChartAtlas& atlas, const CubeFamilySet& fam) {
  std::uint32_t d = atlas.dimension;
  std::vector<ConditionCheck> out;
  TorusPoint identity(d, Rat(0));
  for (std::uint32_t i = 1; i <= fam.depth; ++i) {
    const StageFamilies& st = fam.stage(i);
    std::size_t used = atlas.used_at(i);

    for (std::uint32_t j = 0; j <= i; ++j) {
      ConditionCheck c{"family-monotone", "Dmon", i, static_cast<std::int32_t>(j),
                       false, "", {}};
      if (j == i) {
        c.pass = true;
        c.detail = "next family is the full subdivision";
      } else {
        c.pass = std::includes(st.families[j + 1].cubes.begin(),
                               st.families[j + 1].cubes.end(),
                               st.families[j].cubes.begin(),
                               st.families[j].cubes.end());
        if (!c.pass) c.detail = "family is not contained in its successor";
      }
      out.push_back(std::move(c));
    }

    {
      ConditionCheck c{"identity-covered", "De", i, 0, false, "", {}};
      CubePoint x0 = atlas.charts[0].to_cube(identity);
      c.pass = st.families[0].contains_point(x0);
      c.detail = "identity image " + detail::point_str(x0);
      out.push_back(std::move(c));
    }

    {
      ConditionCheck c{"base-family-dense", "suru", i, 0, false, "", {}};
      std::uint32_t shift = st.resolution - fam.m[i - 1];
      std::set<std::vector<std::uint32_t>> ancestors;
      for (const auto& cube : st.families[0].cubes) {
        std::vector<std::uint32_t> anc(cube.size());
        for (std::size_t a = 0; a < cube.size(); ++a) anc[a] = cube[a] >> shift;
        ancestors.insert(std::move(anc));
      }
      std::uint64_t want = std::uint64_t(1)
                           << (std::uint64_t(fam.m[i - 1]) * d);
      c.pass = ancestors.size() == want;
      c.detail = std::to_string(ancestors.size()) + " of " +
                 std::to_string(want) + " coarse cells reached";
      out.push_back(std::move(c));
    }

    for (std::uint32_t j = 0; j <= i; ++j) {
      ConditionCheck c{"products-step-up", "szorzas", i,
                       static_cast<std::int32_t>(j), false, "", {}};
      ConditionCheck cinv{"inverses-step-up", "inv", i,
                          static_cast<std::int32_t>(j), false, "", {}};
      if (j == i) {
        c.pass = cinv.pass = true;
        c.detail = cinv.detail = "target family is the whole cube";
      } else {
        std::string failure;
        bool ok = detail::images_land_inside(atlas, used, st.families[j],
                                             st.families[j + 1], d, &failure);
        c.pass = cinv.pass = ok;
        if (!ok) c.detail = cinv.detail = failure;
      }
      out.push_back(std::move(c));
      out.push_back(std::move(cinv));
    }

    {
      Rat budget = Rat(1) / Rat(Int(i) * Int(i));
      Rat top_volume = st.families[i].volume(d);
      for (std::size_t r = 0; r < used; ++r) {
        ConditionCheck c{"chart-measure-bound", "mertek", i,
                         static_cast<std::int32_t>(i), false, "", {}};
        Rat measure = top_volume * atlas.charts[r].volume();
        c.pass = measure <= budget;
        c.detail = "chart " + std::to_string(r);
        c.values.emplace_back("measure", measure);
        c.values.emplace_back("budget", budget);
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

// Branching sequence and cube labeling for the nested dyadic subdivisions:
// level k words name the resolution-m_k cubes, children tile their parent.
struct CubeGameSpace {
  ProductSpace space;
  std::vector<std::uint32_t> m;
  std::uint32_t dimension = 0;

  std::vector<std::uint32_t> cube_of(const std::vector<std::uint32_t>& word) const {
    if (word.empty() || word.size() > m.size())
      throw ConfigError("word length must be between 1 and the space depth");
    std::vector<std::uint32_t> idx(dimension, 0);
    for (std::size_t k = 0; k < word.size(); ++k) {
      std::uint32_t width = k ? m[k] - m[k - 1] : m[0];
      std::uint64_t sym = word[k];
      if (sym < 1 || sym > space.m[k])
        throw AlphabetMismatch("symbol outside the level alphabet");
      std::uint64_t rel = sym - 1;
      for (std::uint32_t a = 0; a < dimension; ++a) {
        std::uint64_t chunk = (rel >> (std::uint64_t(width) * a)) &
                              ((std::uint64_t(1) << width) - 1);
        idx[a] = static_cast<std::uint32_t>((std::uint64_t(idx[a]) << width) |
                                            chunk);
      }
    }
    return idx;
  }

  std::vector<std::uint32_t> word_of(const std::vector<std::uint32_t>& idx,
                                     std::size_t level) const {
    std::vector<std::uint32_t> word(level + 1, 1);
    for (std::size_t k = level + 1; k-- > 0;) {
      std::uint32_t width = k ? m[k] - m[k - 1] : m[0];
      std::uint64_t rel = 0;
      std::uint32_t drop = m[level] - m[k];
      for (std::uint32_t a = 0; a < dimension; ++a) {
        std::uint64_t at_k = idx[a] >> drop;
        std::uint64_t chunk = at_k & ((std::uint64_t(1) << width) - 1);
        rel |= chunk << (std::uint64_t(width) * a);
      }
      word[k] = static_cast<std::uint32_t>(rel + 1);
    }
    return word;
  }
};

inline CubeGameSpace cube_game_space(const CubeFamilySet& fam) {
  CubeGameSpace gs;
  gs.dimension = fam.atlas.dimension;
  gs.m = fam.m;
  std::vector<std::uint64_t> sizes;
  for (std::size_t k = 0; k < fam.m.size(); ++k) {
    std::uint32_t prev = k ? fam.m[k - 1] : 0;
    if (k && fam.m[k] <= prev)
      throw NonIncreasingResolutions(
          "family resolutions must increase strictly");
    std::uint64_t width = std::uint64_t(fam.m[k] - prev) * gs.dimension;
    if (width >= 32)
      throw ConfigError("branching exceeds the representable symbol range");
    sizes.push_back(std::uint64_t(1) << width);
  }
  sizes[0] = 1;  // m[0] = 0: the single root cube
  gs.space = ProductSpace::from_sizes(sizes);
  return gs;
}

// Demo element on the cube tree: identity-family cubes on surrogate-selected
// levels, the game reply elsewhere.  Every stage whose block was left
// unselected is then steered into its dense set by the reply.
struct TorusDemoResult {
  std::vector<std::uint32_t> word;
  std::vector<std::size_t> selected;
  std::vector<std::vector<std::uint32_t>> cubes;  // chain, level k at resolution m_k
  bool seed_membership_ok = false;
  std::vector<std::size_t> steered_stages;
  std::vector<std::size_t> member_stages;
  bool ok = false;
};

inline TorusDemoResult torus_demo(const CubeFamilySet& fam,
                                  const CubeGameSpace& gs,
                                  const std::vector<DenseOpenSet>& sets,
                                  const GameSolution& sol, Parity parity) {
  BlockParitySurrogate sel{sol.breakpoints, parity};
  TorusDemoResult out;
  std::size_t coords = gs.space.coords();
  out.selected = sel.selected_coordinates(coords);
  out.word.assign(coords, 1);
  out.seed_membership_ok = true;
  for (std::size_t k = 0; k < coords; ++k) {
    if (sel.selects_coordinate(k) && k >= 1) {
      // Some child of the current cube lies in the stage-k base family.
      bool found = false;
      for (std::uint32_t sym = 1; sym <= gs.space.m[k]; ++sym) {
        out.word[k] = sym;
        std::vector<std::uint32_t> prefix(out.word.begin(),
                                          out.word.begin() + k + 1);
        if (fam.stage(static_cast<std::uint32_t>(k))
                .families[0]
                .cubes.count(gs.cube_of(prefix))) {
          found = true;
          break;
        }
      }
      if (!found) {
        out.seed_membership_ok = false;
        out.word[k] = 1;
      }
    } else if (!sel.selects_coordinate(k)) {
      out.word[k] = k < sol.r.size() ? sol.r[k] : 1;
    }
  }
  for (std::size_t k = 0; k < coords; ++k) {
    std::vector<std::uint32_t> prefix(out.word.begin(),
                                      out.word.begin() + k + 1);
    out.cubes.push_back(gs.cube_of(prefix));
  }
  bool stages_ok = true;
  for (std::size_t k = 1; k <= sets.size(); ++k) {
    bool in_set = sets[k - 1].contains_point(out.word);
    if (in_set) out.member_stages.push_back(k);
    if (!sel.selects_block(k - 1)) {
      out.steered_stages.push_back(k);
      stages_ok = stages_ok && in_set;
    }
  }
  out.ok = out.seed_membership_ok && stages_ok;
  return out;
}

}  // namespace smallgroup
