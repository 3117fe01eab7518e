#include <catch2/catch_amalgamated.hpp>

#include "smallgroup/skeleton.hpp"

using namespace smallgroup;

namespace {

// Brute-force tail event probability by walking every coordinate word.
Rat tail_by_enumeration(const LevelSetsBundle& b, std::size_t n, std::size_t i0,
                        std::size_t top) {
  const Tower& t = b.tower();
  std::uint64_t total = 1;
  for (std::size_t k = 1; k <= top; ++k) total *= t.m(k);
  std::uint64_t hits = 0;
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t rem = idx;
    bool in_union = false;
    for (std::size_t k = 1; k <= top; ++k) {
      std::uint64_t sym = rem % t.m(k);
      rem /= t.m(k);
      if (k >= i0 && b.b_set(k, n).contains(sym)) in_union = true;
    }
    if (in_union) ++hits;
  }
  return Rat(Int(hits), Int(total));
}

}  // namespace

TEST_CASE("bundles expose chain sets per level and index") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 2}), 3);
  CHECK(b.depth() == 2);
  CHECK(b.b_set(2, 0).to_list() == std::vector<std::uint64_t>{0});
  CHECK(b.b_set(2, 1).to_list() == std::vector<std::uint64_t>{0, 1});
  CHECK_THROWS_AS(b.b_set(2, 4), LevelSetsMissing);
  CHECK_THROWS_AS(b.at(5), LevelSetsMissing);
}

TEST_CASE("truncated membership checks the chosen levels only") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 2}), 3);
  CoordinateWord w{{1, 2, 2}};
  CHECK(membership_truncated(b, w, 1, {2}));
  CHECK_FALSE(membership_truncated(b, w, 1, {1, 2}));
  CHECK_FALSE(membership_truncated(b, w, 0, {2}));
  CHECK(membership_truncated(b, w, 1, {}));
  CoordinateWord ones{{1, 1, 1}};
  CHECK(membership_truncated(b, ones, 0, {0, 1, 2}));
  CHECK_THROWS_AS(membership_truncated(b, w, 1, {3}), ConfigError);
}

TEST_CASE("witness product and inverse follow the frozen example") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 2}), 3);
  WitnessedElement x{{{1, 2, 2}}, 1, {2}, {}};
  auto prod = witness_product(b, x, x);
  CHECK(prod.word.k == std::vector<std::uint32_t>{1, 1, 2});
  CHECK(prod.n == 2);
  CHECK(prod.levels == std::vector<std::size_t>{2});
  CHECK(prod.dropped_levels.empty());
  auto inv = witness_inverse(b, x);
  CHECK(inv.word.k == std::vector<std::uint32_t>{1, 2, 1});
  CHECK(inv.n == 2);
  CHECK(inv.levels == std::vector<std::size_t>{2});
}

TEST_CASE("witness combine keeps the intersection of levels") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 2, 3}), 5);
  WitnessedElement x{{{1, 1, 1, 1}}, 0, {0, 1, 2, 3}, {}};
  WitnessedElement y{{{1, 2, 2, 1}}, 2, {1, 3}, {}};
  REQUIRE(membership_truncated(b, y.word, y.n, y.levels));
  auto prod = witness_product(b, x, y);
  CHECK(prod.levels == std::vector<std::size_t>{1, 3});
  CHECK(prod.n == 3);
}

TEST_CASE("every membership-backed pair combines without violation") {
  std::vector<Tower> towers;
  towers.push_back(make_cyclic_tower(2, {0, 1, 2, 3}));
  towers.push_back(make_product_tower(2, {0, 1, 2, 3}));
  for (auto& t : towers) {
    auto b = LevelSetsBundle::build(std::move(t), 5);
    std::size_t top = b.depth();
    std::vector<WitnessedElement> witnesses;
    for (std::uint64_t g = 0; g < b.tower().order(top); ++g) {
      auto w = encode_element(b.tower(), b.fibers(), top, g);
      for (std::size_t n = 0; n <= 3; ++n)
        for (std::uint64_t mask = 0; mask < (1u << (top + 1)); ++mask) {
          std::vector<std::size_t> levels;
          for (std::size_t i = 0; i <= top; ++i)
            if (mask & (1u << i)) levels.push_back(i);
          if (membership_truncated(b, w, n, levels))
            witnesses.push_back({w, n, levels, {}});
        }
    }
    for (const auto& x : witnesses) CHECK_NOTHROW(witness_inverse(b, x));
    for (std::size_t s = 0; s < witnesses.size(); s += 97)
      for (std::size_t r = 0; r < witnesses.size(); r += 89)
        CHECK_NOTHROW(witness_product(b, witnesses[s], witnesses[r]));
  }
}

TEST_CASE("tail event measure matches the frozen toy value") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 2}), 3);
  auto tm = tail_event_measure(b, 0, 1, 2);
  CHECK(tm.exact == Rat(3, 4));
  CHECK(tm.term_sum == Rat(1));
  CHECK(tm.reciprocal_bound == Rat(5, 4));
  CHECK(tm.within_bound);
}

TEST_CASE("tail event measure matches brute-force enumeration") {
  std::vector<Tower> towers;
  towers.push_back(make_cyclic_tower(2, {0, 1, 2, 3}));
  towers.push_back(make_product_tower(2, {0, 2, 3}));
  towers.push_back(make_cyclic_tower(3, {0, 1, 2}));
  for (auto& t : towers) {
    std::size_t depth = t.depth();
    auto b = LevelSetsBundle::build(std::move(t), depth + 1);
    for (std::size_t n = 0; n <= depth; ++n)
      for (std::size_t i0 = 1; i0 <= depth; ++i0)
        for (std::size_t top = i0; top <= depth; ++top) {
          auto tm = tail_event_measure(b, n, i0, top);
          CHECK(tm.exact == tail_by_enumeration(b, n, i0, top));
          CHECK(tm.exact <= tm.term_sum);
        }
  }
}

TEST_CASE("thin towers keep the tail under the reciprocal-square bound") {
  auto thin = thin_tower(parse_generator("cyclic:2"), 3, ThinMode::Exact);
  auto b = LevelSetsBundle::build(std::move(thin.tower), 4);
  for (std::size_t n = 0; n <= 3; ++n)
    for (std::size_t i0 = std::max<std::size_t>(n, 1); i0 <= 3; ++i0) {
      auto tm = tail_event_measure(b, n, i0, 3);
      INFO("n=" << n << " i0=" << i0);
      CHECK(tm.within_bound);
      CHECK(tm.exact <= tm.reciprocal_bound);
    }
}

TEST_CASE("tail argument bounds are validated") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 2}), 3);
  CHECK_THROWS_AS(tail_event_measure(b, 0, 0, 2), ConfigError);
  CHECK_THROWS_AS(tail_event_measure(b, 0, 1, 7), ConfigError);
  CHECK_THROWS_AS(tail_event_measure(b, 0, 2, 1), ConfigError);
}
