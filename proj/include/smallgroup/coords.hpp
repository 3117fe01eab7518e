#pragma once

#include <cstdint>
#include <vector>

#include "smallgroup/elemset.hpp"
#include "smallgroup/errors.hpp"
#include "smallgroup/fiber.hpp"
#include "smallgroup/group.hpp"
#include "smallgroup/rational.hpp"

namespace smallgroup {

// Coordinate word of a tower element: k[i] is the 1-based fiber position of
// the level-i component over its level-(i-1) image.  k[0] == 1 always, and
// the all-ones word is the identity thread.
struct CoordinateWord {
  std::vector<std::uint32_t> k;

  std::size_t top_level() const { return k.size() - 1; }
  bool operator==(const CoordinateWord&) const = default;
};

// Compatible element word g_0,...,g_L: consecutive entries linked by bonds.
inline void check_compatible(const Tower& t, const std::vector<std::uint64_t>& g) {
  if (g.empty()) throw ConfigError("element word is empty");
  if (g.size() > t.levels.size()) throw ConfigError("element word longer than the tower");
  if (g[0] != 0) throw IncompatibleWord("level 0 entry must be the identity", 0);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (g[i + 1] >= t.order(i + 1))
      throw ConfigError("element out of range at level " + std::to_string(i + 1));
    if (t.bonds[i](g[i + 1]) != g[i])
      throw IncompatibleWord("entries at levels " + std::to_string(i) + "," +
                                 std::to_string(i + 1) + " are not bond-linked",
                             i + 1);
  }
}

inline CoordinateWord encode_word(const Tower& t, const FiberEnumeration& fe,
                                  const std::vector<std::uint64_t>& g) {
  check_compatible(t, g);
  CoordinateWord w;
  w.k.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w.k.push_back(fe.psi(i, g[i]));
  return w;
}

// Thread of a single element down the tower, then encode.
inline CoordinateWord encode_element(const Tower& t, const FiberEnumeration& fe,
                                     std::size_t level, std::uint64_t g) {
  if (g >= t.order(level)) throw ConfigError("element out of range");
  std::vector<std::uint64_t> word(level + 1);
  for (std::size_t i = 0; i <= level; ++i) word[i] = t.map_down(g, level, i);
  return encode_word(t, fe, word);
}

inline std::vector<std::uint64_t> decode_word(const Tower& t, const FiberEnumeration& fe,
                                              const CoordinateWord& w) {
  if (w.k.empty()) throw ConfigError("coordinate word is empty");
  if (w.k.size() > t.levels.size())
    throw ConfigError("coordinate word longer than the tower");
  if (w.k[0] != 1) throw ConfigError("coordinate words start with 1");
  std::vector<std::uint64_t> g = {0};
  for (std::size_t i = 1; i < w.k.size(); ++i) {
    if (w.k[i] < 1 || w.k[i] > t.m(i))
      throw ConfigError("coordinate out of range at level " + std::to_string(i));
    g.push_back(fe.fiber_element(i, g[i - 1], w.k[i]));
  }
  return g;
}

// Product measure of the cylinder fixing the word's coordinates: each level
// contributes 1/m_i, so a depth-L cylinder has measure 1/|G_L|.
inline Rat cylinder_measure(const Tower& t, const CoordinateWord& w) {
  Rat r = 1;
  for (std::size_t i = 0; i < w.k.size(); ++i) r /= Rat(Int(t.m(i)));
  return r;
}

inline CoordinateWord multiply_words(const Tower& t, const FiberEnumeration& fe,
                                     const CoordinateWord& a, const CoordinateWord& b) {
  if (a.k.size() != b.k.size())
    throw ConfigError("coordinate product needs words of equal length");
  auto ga = decode_word(t, fe, a);
  auto gb = decode_word(t, fe, b);
  std::vector<std::uint64_t> out(ga.size());
  for (std::size_t i = 0; i < ga.size(); ++i) out[i] = t.levels[i].op(ga[i], gb[i]);
  return encode_word(t, fe, out);
}

inline CoordinateWord invert_word(const Tower& t, const FiberEnumeration& fe,
                                  const CoordinateWord& a) {
  auto ga = decode_word(t, fe, a);
  std::vector<std::uint64_t> out(ga.size());
  for (std::size_t i = 0; i < ga.size(); ++i) out[i] = t.levels[i].inverse(ga[i]);
  return encode_word(t, fe, out);
}

// Exact measure transport along the bonds: a set X at level i and its full
// preimage at level j >= i have equal normalized counting measure.
struct PushforwardCheck {
  std::size_t from_level = 0;
  std::size_t to_level = 0;
  std::uint64_t set_size = 0;
  std::uint64_t preimage_size = 0;
  Rat measure_from;
  Rat measure_to;
  bool equal = false;
  ElemSet preimage = ElemSet::empty(1, ElemSet::Rep::Dense);
};

inline PushforwardCheck pushforward_check(const Tower& t, std::size_t i, std::size_t j,
                                          const ElemSet& x) {
  if (j < i) throw ConfigError("pushforward target level must be >= source level");
  if (x.universe() != t.order(i)) throw ConfigError("set universe does not match level order");
  PushforwardCheck out;
  out.from_level = i;
  out.to_level = j;
  out.set_size = x.size();
  out.preimage = ElemSet::empty(t.order(j), ElemSet::Rep::Dense);
  for (std::uint64_t g = 0; g < t.order(j); ++g)
    if (x.contains(t.map_down(g, j, i))) out.preimage.bits().insert(g);
  out.preimage_size = out.preimage.size();
  out.measure_from = Rat(Int(out.set_size), Int(t.order(i)));
  out.measure_to = Rat(Int(out.preimage_size), Int(t.order(j)));
  out.equal = out.measure_from == out.measure_to;
  return out;
}

}  // namespace smallgroup
