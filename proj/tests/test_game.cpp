#include <catch2/catch_amalgamated.hpp>

#include "smallgroup/game.hpp"

using namespace smallgroup;

namespace {

ProductSpace space(std::initializer_list<std::uint64_t> sizes) {
  return ProductSpace::from_sizes(std::vector<std::uint64_t>(sizes));
}

DenseOpenSet from_prefixes(const ProductSpace& sp, std::size_t d,
                           std::initializer_list<std::vector<std::uint32_t>> ps) {
  DenseOpenSet s(sp, d);
  for (const auto& p : ps) s.add_prefix(p);
  return s;
}

}  // namespace

TEST_CASE("density means every stem extends into the set") {
  auto sp = space({2, 2});
  CHECK(from_prefixes(sp, 2, {{1, 1}, {2, 1}}).is_dense());
  CHECK_FALSE(from_prefixes(sp, 2, {{1, 1}}).is_dense());
  CHECK(DenseOpenSet::whole(sp).is_dense());
  CHECK_FALSE(DenseOpenSet(sp, 0).is_dense());
}

TEST_CASE("cylinder containment uses the resolution cut") {
  auto sp = space({2, 3, 2});
  auto s = from_prefixes(sp, 2, {{1}, {2, 1}});
  CHECK(s.contains_cylinder({1}));
  CHECK(s.contains_cylinder({1, 3}));
  CHECK(s.contains_cylinder({2, 1}));
  CHECK_FALSE(s.contains_cylinder({2}));
  CHECK(s.contains_point({2, 1, 2}));
  CHECK_FALSE(s.contains_point({2, 2, 1}));
  CHECK(s.count() == 4);  // (1,*) and (2,1)
  CHECK_THROWS_AS(s.add_prefix({1, 4}), AlphabetMismatch);
  CHECK_THROWS_AS(s.contains_cylinder({3}), AlphabetMismatch);
  CHECK_THROWS_AS(DenseOpenSet(sp, 4), ConfigError);
}

TEST_CASE("ragged prefixes round-trip through the table") {
  auto sp = space({2, 2});
  auto s = from_prefixes(sp, 2, {{2}});
  auto ps = s.prefixes();
  REQUIRE(ps.size() == 2);
  CHECK(ps[0] == std::vector<std::uint32_t>{2, 1});
  CHECK(ps[1] == std::vector<std::uint32_t>{2, 2});
}

TEST_CASE("coordinate windows are dense sets at the window resolution") {
  auto sp = space({1, 2, 3});
  auto w = DenseOpenSet::coordinate_window(sp, 2, {2});
  CHECK(w.resolution() == 3);
  CHECK(w.is_dense());
  CHECK(w.contains_point({1, 2, 2}));
  CHECK_FALSE(w.contains_point({1, 2, 3}));
  CHECK_THROWS_AS(DenseOpenSet::coordinate_window(sp, 1, {3}), AlphabetMismatch);
  CHECK_THROWS_AS(DenseOpenSet::coordinate_window(sp, 7, {1}), ConfigError);
}

TEST_CASE("the whole-space game is solved by the one-step reply") {
  auto sp = space({2, 2, 2, 2});
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::whole(sp));
  auto sol = solve_game(sp, sets);
  CHECK(sol.breakpoints == std::vector<std::size_t>{0, 1});
  CHECK(sol.r == std::vector<std::uint32_t>{1});
  CHECK(verify_game(sp, sets, sol).ok);
}

TEST_CASE("the solver finds shortest lexicographically first segments") {
  auto sp = space({1, 2, 3, 2, 3});
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::coordinate_window(sp, 2, {2}));
  auto sol = solve_game(sp, sets);
  CHECK(sol.breakpoints == std::vector<std::size_t>{0, 3});
  CHECK(sol.r == std::vector<std::uint32_t>{1, 1, 2});

  std::vector<DenseOpenSet> two;
  two.push_back(DenseOpenSet::coordinate_window(sp, 1, {2}));
  two.push_back(DenseOpenSet::coordinate_window(sp, 3, {1}));
  auto sol2 = solve_game(sp, two);
  CHECK(sol2.breakpoints == std::vector<std::size_t>{0, 2, 4});
  CHECK(sol2.r == std::vector<std::uint32_t>{1, 2, 1, 1});
  auto verify = verify_game(sp, two, sol2);
  REQUIRE(verify.stages.size() == 2);
  CHECK(verify.stages[0].steered);
  CHECK(verify.stages[1].steered);
  CHECK(verify.ok);
}

TEST_CASE("each stage steers every earlier prefix, not just the played one") {
  // Stage 1 lands at breakpoint 2; stage 2's segment must work under all
  // four (M_0 x M_1) stems, including the ones the reply never visits.
  auto sp = space({2, 2, 2, 2});
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::coordinate_window(sp, 1, {1}));
  sets.push_back(DenseOpenSet::coordinate_window(sp, 3, {2}));
  auto sol = solve_game(sp, sets);
  REQUIRE(sol.breakpoints == std::vector<std::size_t>{0, 2, 4});
  auto v = verify_game(sp, sets, sol);
  CHECK(v.ok);
  GameSolution bad = sol;
  bad.r[3] = 1;  // break stage 2's containment
  auto vb = verify_game(sp, sets, bad);
  CHECK(vb.shape_ok);
  CHECK_FALSE(vb.ok);
  CHECK_FALSE(vb.stages[1].steered);
}

TEST_CASE("malformed runs fail the shape check") {
  auto sp = space({2, 2});
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::whole(sp));
  GameSolution sol;
  sol.breakpoints = {0, 0};
  CHECK_FALSE(verify_game(sp, sets, sol).shape_ok);
  sol.breakpoints = {0, 1};
  sol.r = {7};
  CHECK_FALSE(verify_game(sp, sets, sol).shape_ok);
}

TEST_CASE("a too-short space raises with the failing stage") {
  auto sp = space({2, 2});
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::coordinate_window(sp, 1, {2}));
  sets.push_back(DenseOpenSet::coordinate_window(sp, 1, {2}));
  try {
    solve_game(sp, sets);
    FAIL("expected the space to be too short");
  } catch (const SpaceTooShallow& e) {
    CHECK(e.stage() == 2);
  }
}

TEST_CASE("set families must get finer stage by stage") {
  auto sp = space({2, 2, 2});
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::coordinate_window(sp, 2, {1}));
  sets.push_back(DenseOpenSet::coordinate_window(sp, 1, {1}));
  CHECK_THROWS_AS(solve_game(sp, sets), NonIncreasingResolutions);
  std::vector<DenseOpenSet> sparse;
  sparse.push_back(from_prefixes(sp, 2, {{1, 1}}));
  CHECK_THROWS_AS(solve_game(sp, sparse), CheckFailure);
}

TEST_CASE("sampled verification agrees with the universal check") {
  auto sp = space({1, 2, 3, 2, 3});
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::coordinate_window(sp, 1, {2}));
  sets.push_back(DenseOpenSet::coordinate_window(sp, 3, {1}));
  auto sol = solve_game(sp, sets);
  std::mt19937_64 rng(7);
  auto sv = sample_verify(sp, sets, sol, rng, 200);
  CHECK(sv.samples == 400);
  CHECK(sv.ok);
}

TEST_CASE("block parity selects alternating breakpoint blocks") {
  BlockParitySurrogate even{{0, 2, 4}, Parity::Even};
  CHECK(even.block_of(0) == 0);
  CHECK(even.block_of(1) == 0);
  CHECK(even.block_of(2) == 1);
  CHECK(even.block_of(5) == 2);
  CHECK(even.selects_coordinate(0));
  CHECK_FALSE(even.selects_coordinate(3));
  CHECK(even.selects_coordinate(9));
  BlockParitySurrogate odd{{0, 2, 4}, Parity::Odd};
  CHECK(odd.selected_coordinates(6) == std::vector<std::size_t>{2, 3});
}

TEST_CASE("the demo word interleaves identity and reply blocks") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 2}), 3);
  auto sp = ProductSpace::from_tower(b.tower());
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::coordinate_window(sp, 1, {2}));
  auto sol = solve_game(sp, sets);
  REQUIRE(sol.breakpoints == std::vector<std::size_t>{0, 2});
  REQUIRE(sol.r == std::vector<std::uint32_t>{1, 2});

  auto even = demo_nonmeager(b, sp, sets, sol, Parity::Even);
  CHECK(even.word == std::vector<std::uint32_t>{1, 1, 1});
  CHECK(even.selected == std::vector<std::size_t>{0, 1});
  CHECK(even.base_membership_ok);
  CHECK(even.steered_stages.empty());
  CHECK(even.ok);

  auto odd = demo_nonmeager(b, sp, sets, sol, Parity::Odd);
  CHECK(odd.word == std::vector<std::uint32_t>{1, 2, 1});
  CHECK(odd.selected == std::vector<std::size_t>{2});
  CHECK(odd.base_membership_ok);
  CHECK(odd.steered_stages == std::vector<std::size_t>{1});
  CHECK(odd.member_stages == std::vector<std::size_t>{1});
  CHECK(odd.ok);
}

TEST_CASE("demo words enter every window that allows the identity") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 3, 5}), 4);
  auto sp = ProductSpace::from_tower(b.tower());
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::coordinate_window(sp, 1, {1}));
  sets.push_back(DenseOpenSet::coordinate_window(sp, 2, {1, 3}));
  sets.push_back(DenseOpenSet::coordinate_window(sp, 3, {1, 2}));
  auto sol = solve_game(sp, sets);
  for (auto parity : {Parity::Even, Parity::Odd}) {
    auto demo = demo_nonmeager(b, sp, sets, sol, parity);
    CHECK(demo.ok);
    CHECK(demo.member_stages == std::vector<std::size_t>{1, 2, 3});
  }
}

TEST_CASE("the demo rejects spaces that do not match the tower") {
  auto b = LevelSetsBundle::build(make_cyclic_tower(2, {0, 1, 2}), 3);
  auto sp = space({1, 2, 4});
  std::vector<DenseOpenSet> sets;
  sets.push_back(DenseOpenSet::whole(sp));
  auto sol = solve_game(sp, sets);
  CHECK_THROWS_AS(demo_nonmeager(b, sp, sets, sol, Parity::Even), AlphabetMismatch);
}

TEST_CASE("seeded window families are always solvable and verifiable") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> sizes = {1};
    std::uniform_int_distribution<std::uint64_t> width(2, 4);
    std::uniform_int_distribution<std::size_t> depth(5, 8);
    std::size_t d = depth(rng);
    for (std::size_t i = 0; i < d; ++i) sizes.push_back(width(rng));
    auto sp = ProductSpace::from_sizes(sizes);
    std::uniform_int_distribution<std::size_t> stages(1, 4);
    auto fam = make_window_family(sp, stages(rng), rng, false);
    CHECK(std::is_sorted(fam.coords.begin(), fam.coords.end()));
    for (const auto& s : fam.sets) CHECK(s.is_dense());
    auto sol = solve_game(sp, fam.sets);
    CHECK(verify_game(sp, fam.sets, sol).ok);
    auto sv = sample_verify(sp, fam.sets, sol, rng, 50);
    CHECK(sv.ok);
  }
}

TEST_CASE("dense sets parse from JSON in both forms") {
  auto sp = space({2, 2});
  nlohmann::json j = nlohmann::json::array();
  j.push_back({{"resolution", 2}, {"prefixes", {{1, 1}, {2, 1}}}});
  j.push_back({{"window", {{"coordinate", 1}, {"allowed", {1}}}}});
  auto sets = dense_sets_from_json(sp, j);
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].is_dense());
  CHECK(sets[0].contains_point({2, 1}));
  CHECK(sets[1].contains_point({2, 1}));
  CHECK_FALSE(sets[1].contains_point({2, 2}));
}
