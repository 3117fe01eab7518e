#include <catch2/catch_amalgamated.hpp>

#include "smallgroup/fiber.hpp"
#include "smallgroup/group.hpp"

using namespace smallgroup;

namespace {

bool has_violation(const std::vector<GroupViolation>& vs, GroupViolationKind k,
                   const std::vector<std::size_t>& witness) {
  for (const auto& v : vs)
    if (v.kind == k && v.witness == witness) return true;
  return false;
}

}  // namespace

TEST_CASE("table validation reports a missing inverse") {
  auto vs = check_table({{0, 1}, {1, 1}}, Validation::Full);
  REQUIRE(vs.size() == 1);
  CHECK(has_violation(vs, GroupViolationKind::NoInverse, {1}));
  CHECK_THROWS_AS(FiniteGroup::from_table({{0, 1}, {1, 1}}), GroupValidationError);
}

TEST_CASE("table validation reports closure violations with cell witnesses") {
  auto vs = check_table({{0, 5}, {1, 0}}, Validation::Full);
  REQUIRE(vs.size() == 1);
  CHECK(has_violation(vs, GroupViolationKind::NonClosure, {0, 1}));
}

TEST_CASE("table validation reports a missing identity") {
  auto vs = check_table({{1, 1}, {1, 1}}, Validation::Full);
  CHECK(has_violation(vs, GroupViolationKind::NoIdentity, {}));
}

TEST_CASE("table validation collects every violated axiom") {
  // Order-5 loop: Latin square with identity 0, but x=2,3,4 have no
  // two-sided inverse and (1*1)*2 != 1*(1*2).
  std::vector<std::vector<std::uint64_t>> loop = {{0, 1, 2, 3, 4},
                                                  {1, 0, 3, 4, 2},
                                                  {2, 3, 4, 1, 0},
                                                  {3, 4, 0, 2, 1},
                                                  {4, 2, 1, 0, 3}};
  auto vs = check_table(loop, Validation::Full);
  CHECK(has_violation(vs, GroupViolationKind::NoInverse, {2}));
  CHECK(has_violation(vs, GroupViolationKind::NoInverse, {3}));
  CHECK(has_violation(vs, GroupViolationKind::NoInverse, {4}));
  CHECK(has_violation(vs, GroupViolationKind::NonAssociative, {1, 1, 2}));
  // Trusted validation skips the associativity scan.
  auto trusted = check_table(loop, Validation::Trusted);
  for (const auto& v : trusted) CHECK(v.kind != GroupViolationKind::NonAssociative);
}

TEST_CASE("table groups expose op, identity and inverses") {
  auto g = FiniteGroup::from_table({{1, 0}, {0, 1}});  // Z/2 with identity 1
  CHECK(g.order() == 2);
  CHECK(g.identity() == 1);
  CHECK(g.op(0, 0) == 1);
  CHECK(g.inverse(0) == 0);
}

TEST_CASE("cyclic groups use modular arithmetic") {
  auto g = FiniteGroup::cyclic(8);
  CHECK(g.order() == 8);
  CHECK(g.identity() == 0);
  CHECK(g.op(5, 6) == 3);
  CHECK(g.inverse(3) == 5);
  CHECK(g.inverse(0) == 0);
}

TEST_CASE("digit-string groups add digitwise") {
  auto g3 = FiniteGroup::product(3, 2);
  CHECK(g3.order() == 9);
  CHECK(g3.op(4, 7) == 2);       // (1,1)+(2,1) digitwise mod 3
  CHECK(g3.inverse(5) == 7);     // (1,2) -> (2,1)
  CHECK(g3.op(5, g3.inverse(5)) == 0);
  auto g2 = FiniteGroup::product(2, 3);
  CHECK(g2.op(5, 3) == 6);       // xor
  CHECK(g2.inverse(5) == 5);
}

TEST_CASE("generated towers have the right orders and bonds") {
  auto t = make_cyclic_tower(2, {0, 1, 2});
  REQUIRE(t.levels.size() == 3);
  CHECK(t.order(0) == 1);
  CHECK(t.order(1) == 2);
  CHECK(t.order(2) == 4);
  CHECK(t.m(0) == 1);
  CHECK(t.m(1) == 2);
  CHECK(t.m(2) == 2);
  CHECK(t.map_down(3, 2, 1) == 1);
  CHECK(t.map_down(3, 2, 0) == 0);
  auto p = make_product_tower(2, {0, 2, 4});
  CHECK(p.order(2) == 16);
  CHECK(p.bonds[1](13) == 3);  // drops two low digits
}

TEST_CASE("tower exponent sequences are validated") {
  CHECK_THROWS_AS(make_cyclic_tower(2, {1, 2}), ConfigError);
  CHECK_THROWS_AS(make_cyclic_tower(2, {0, 2, 2}), ConfigError);
  CHECK_THROWS_AS(make_cyclic_tower(1, {0, 1}), ConfigError);
  TowerLimits tight;
  tight.max_order = 8;
  CHECK_THROWS_AS(make_cyclic_tower(2, {0, 1, 4}, tight), ConfigError);
}

TEST_CASE("explicit towers are validated as homomorphic surjections") {
  nlohmann::json good = {
      {"levels",
       {{{"table", {{0}}}},
        {{"table", {{0, 1}, {1, 0}}}},
        {{"table", {{0, 1, 2, 3}, {1, 2, 3, 0}, {2, 3, 0, 1}, {3, 0, 1, 2}}}}}},
      {"bonds", {{0, 0}, {0, 1, 0, 1}}}};
  auto t = tower_from_json(good);
  CHECK(t.depth() == 2);
  CHECK(t.m(2) == 2);

  nlohmann::json bad = good;
  bad["bonds"][1] = {0, 0, 1, 1};  // floor-div map is not additive mod 4
  CHECK_THROWS_AS(tower_from_json(bad), TowerError);

  nlohmann::json nonsurj = good;
  nonsurj["bonds"][1] = {0, 0, 0, 0};
  CHECK_THROWS_AS(tower_from_json(nonsurj), TowerError);
}

TEST_CASE("generator specs parse from strings") {
  auto g = parse_generator("cyclic:2:0,1,3");
  CHECK(g.kind == GroupKind::Cyclic);
  CHECK(g.base == 2);
  CHECK(g.exponents == std::vector<std::uint32_t>{0, 1, 3});
  auto p = parse_generator("product:3");
  CHECK(p.kind == GroupKind::Product);
  CHECK(p.exponents.empty());
  CHECK_THROWS_AS(parse_generator("weird:2"), ConfigError);
  CHECK_THROWS_AS(parse_generator("cyclic"), ConfigError);
}

TEST_CASE("generator form of tower JSON builds the generated tower") {
  nlohmann::json j = {{"generator", "cyclic"}, {"base", 2}, {"exponents", {0, 1, 3}}};
  auto t = tower_from_json(j);
  CHECK(t.order(2) == 8);
  CHECK(t.bonds[1].kind() == SurjHom::Kind::Mod);
}

TEST_CASE("fiber enumeration is ascending with identity first") {
  auto t = make_cyclic_tower(2, {0, 1, 2});
  FiberEnumeration fe(t);
  CHECK(fe.class_count(2) == 2);
  CHECK(fe.fiber(2, 0) == std::vector<std::uint64_t>{0, 2});
  CHECK(fe.fiber(2, 1) == std::vector<std::uint64_t>{1, 3});
  CHECK(fe.psi(2, 0) == 1);
  CHECK(fe.psi(2, 1) == 1);
  CHECK(fe.psi(2, 2) == 2);
  CHECK(fe.psi(2, 3) == 2);
  CHECK(fe.fiber_element(2, 1, 2) == 3);
  CHECK(fe.psi(0, 0) == 1);
}

TEST_CASE("closed-form fibers match the table route") {
  auto closed = make_cyclic_tower(2, {0, 1, 3});
  std::vector<std::vector<std::uint64_t>> z2 = {{0, 1}, {1, 0}};
  std::vector<std::vector<std::uint64_t>> z8(8, std::vector<std::uint64_t>(8));
  for (std::uint64_t a = 0; a < 8; ++a)
    for (std::uint64_t b = 0; b < 8; ++b) z8[a][b] = (a + b) % 8;
  Tower tab;
  tab.levels.push_back(FiniteGroup::from_table({{0}}));
  tab.levels.push_back(FiniteGroup::from_table(z2));
  tab.levels.push_back(FiniteGroup::from_table(z8));
  tab.bonds.push_back(SurjHom::table_bond({0, 0}));
  tab.bonds.push_back(SurjHom::table_bond({0, 1, 0, 1, 0, 1, 0, 1}));
  validate_tower(tab);
  FiberEnumeration fc(closed), ft(tab);
  for (std::size_t i = 1; i <= 2; ++i) {
    REQUIRE(fc.class_count(i) == ft.class_count(i));
    for (std::uint64_t x = 0; x < closed.order(i); ++x) CHECK(fc.psi(i, x) == ft.psi(i, x));
    for (std::uint64_t parent = 0; parent < closed.order(i - 1); ++parent)
      CHECK(fc.fiber(i, parent) == ft.fiber(i, parent));
  }
}

TEST_CASE("identity is moved to the front of its fiber") {
  // Z/2 relabeled so the identity is element 1.
  Tower t;
  t.levels.push_back(FiniteGroup::from_table({{0}}));
  t.levels.push_back(FiniteGroup::from_table({{1, 0}, {0, 1}}));
  t.bonds.push_back(SurjHom::table_bond({0, 0}));
  validate_tower(t);
  FiberEnumeration fe(t);
  CHECK(fe.fiber(1, 0) == std::vector<std::uint64_t>{1, 0});
  CHECK(fe.psi(1, 1) == 1);
  CHECK(fe.psi(1, 0) == 2);
}
