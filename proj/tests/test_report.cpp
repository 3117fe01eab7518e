#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <smallgroup/report.hpp>
#include <smallgroup/scenario.hpp>

using namespace smallgroup;
using nlohmann::json;

namespace {

Report tiny_report() {
  Report rep;
  rep.scenario["kind"] = "thin";
  rep.scenario["generator"] = "cyclic:2";
  rep.has_rng = true;
  rep.seed = 11;
  CheckRecord a;
  a.name = "first";
  a.tag = "korl";
  a.pass = true;
  a.witness = "all small";
  a.values.emplace_back("ratio", Rat(Int(-3), Int(4)));
  rep.checks.push_back(a);
  CheckRecord b;
  b.name = "second";
  b.tag = "ffff";
  b.pass = false;
  rep.checks.push_back(b);
  return rep;
}

bool digits_only(const std::string& s, bool allow_sign) {
  if (s.empty()) return false;
  std::size_t i = allow_sign && s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

// Structural walk of a report against the shipped schema: key sets, required
// fields, the tag and status enums, and the rational string patterns.
void conforms(const json& rep, const json& schema) {
  const std::set<std::string> top = {"tool", "scenario", "rng", "checks",
                                     "summary"};
  for (const auto& [k, v] : rep.items()) {
    (void)v;
    REQUIRE(top.count(k) == 1);
  }
  for (const char* k : {"tool", "scenario", "checks", "summary"})
    REQUIRE(rep.contains(k));

  REQUIRE(rep.at("tool").at("name") == "smallgroup-lab");
  REQUIRE(rep.at("tool").at("version").is_string());

  std::set<std::string> kinds(
      schema.at("properties").at("scenario").at("properties").at("kind")
          .at("enum").begin(),
      schema.at("properties").at("scenario").at("properties").at("kind")
          .at("enum").end());
  REQUIRE(kinds.count(rep.at("scenario").at("kind").get<std::string>()) == 1);

  if (rep.contains("rng")) {
    REQUIRE(rep.at("rng").at("algorithm") == "mt19937_64");
    REQUIRE(rep.at("rng").at("seed").is_number_unsigned());
  }

  std::set<std::string> tags(
      schema.at("definitions").at("check").at("properties").at("tag")
          .at("enum").begin(),
      schema.at("definitions").at("check").at("properties").at("tag")
          .at("enum").end());
  std::size_t passed = 0, failed = 0;
  for (const auto& c : rep.at("checks")) {
    for (const auto& [k, v] : c.items()) {
      (void)v;
      REQUIRE((k == "name" || k == "tag" || k == "status" || k == "witness" ||
               k == "values"));
    }
    REQUIRE(c.at("name").is_string());
    REQUIRE(!c.at("name").get<std::string>().empty());
    REQUIRE(tags.count(c.at("tag").get<std::string>()) == 1);
    std::string status = c.at("status").get<std::string>();
    REQUIRE((status == "pass" || status == "fail"));
    (status == "pass" ? passed : failed) += 1;
    if (c.contains("witness")) REQUIRE(c.at("witness").is_string());
    if (c.contains("values"))
      for (const auto& [k, v] : c.at("values").items()) {
        (void)k;
        REQUIRE(digits_only(v.at("num").get<std::string>(), true));
        REQUIRE(digits_only(v.at("den").get<std::string>(), false));
      }
  }
  REQUIRE(rep.at("summary").at("total").get<std::size_t>() ==
          rep.at("checks").size());
  REQUIRE(rep.at("summary").at("passed").get<std::size_t>() == passed);
  REQUIRE(rep.at("summary").at("failed").get<std::size_t>() == failed);
}

}  // namespace

TEST_CASE("report serialization shape") {
  Report rep = tiny_report();
  auto j = report_to_json(rep);

  auto it = j.begin();
  REQUIRE(it.key() == "tool");
  ++it;
  REQUIRE(it.key() == "scenario");
  ++it;
  REQUIRE(it.key() == "rng");
  ++it;
  REQUIRE(it.key() == "checks");
  ++it;
  REQUIRE(it.key() == "summary");

  REQUIRE(j["tool"]["name"] == "smallgroup-lab");
  REQUIRE(j["rng"]["algorithm"] == "mt19937_64");
  REQUIRE(j["rng"]["seed"] == 11);
  REQUIRE(j["checks"].size() == 2);
  REQUIRE(j["checks"][0]["status"] == "pass");
  REQUIRE(j["checks"][0]["witness"] == "all small");
  REQUIRE(j["checks"][0]["values"]["ratio"]["num"] == "-3");
  REQUIRE(j["checks"][0]["values"]["ratio"]["den"] == "4");
  REQUIRE(!j["checks"][1].contains("witness"));
  REQUIRE(!j["checks"][1].contains("values"));
  REQUIRE(j["summary"]["total"] == 2);
  REQUIRE(j["summary"]["passed"] == 1);
  REQUIRE(j["summary"]["failed"] == 1);

  std::string text = report_to_string(rep);
  REQUIRE(!text.empty());
  REQUIRE(text.back() == '\n');
  REQUIRE(text.find("timestamp") == std::string::npos);

  Report no_rng = rep;
  no_rng.has_rng = false;
  REQUIRE(!report_to_json(no_rng).contains("rng"));
}

TEST_CASE("table rendering lists every check") {
  Report rep = tiny_report();
  std::string table = render_table(rep);
  REQUIRE(table.find("first") != std::string::npos);
  REQUIRE(table.find("second") != std::string::npos);
  REQUIRE(table.find("korl") != std::string::npos);
  REQUIRE(table.find("fail") != std::string::npos);
  REQUIRE(table.find("ratio = -3/4") != std::string::npos);
  REQUIRE(table.find("1 passed") != std::string::npos);
  REQUIRE(table.find("1 failed") != std::string::npos);
}

TEST_CASE("embedded schema matches the shipped file") {
  std::ifstream in(std::string(SMALLGROUP_SOURCE_DIR) +
                   "/schema/report.schema.json");
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  REQUIRE(buf.str() == std::string(kReportSchema));
  REQUIRE_NOTHROW(json::parse(kReportSchema));
}

TEST_CASE("scenario reports conform to the schema") {
  json schema = json::parse(kReportSchema);
  std::vector<json> configs = {
      {{"kind", "thin"}, {"generator", "cyclic:2"}, {"depth", 2},
       {"mode", "apriori"}},
      {{"kind", "levelsets"}, {"generator", "cyclic:2"},
       {"exponents", {0, 1, 2}}},
      {{"kind", "coords"}, {"generator", "cyclic:2"},
       {"exponents", {0, 1, 2}}},
      {{"kind", "skeleton"}, {"generator", "cyclic:2"}, {"depth", 2},
       {"mode", "exact"}},
      {{"kind", "game"}, {"space", {2, 2}},
       {"dense", json::array({json::array({json::array({1, 1}),
                                           json::array({2, 1})})})}},
      {{"kind", "demo"}, {"generator", "cyclic:2"}, {"depth", 2},
       {"samples", 50}},
      {{"kind", "torus"}, {"atlas", "two-arcs"}, {"depth", 2}},
      {{"kind", "full-torus-pipeline"}, {"atlas", "two-arcs"}, {"depth", 2}},
      {{"kind", "full-profinite-pipeline"}, {"generator", "cyclic:2"},
       {"depth", 2}, {"samples", 20}},
  };
  for (const auto& config : configs) {
    INFO(config.dump());
    Report rep = run_scenario(config);
    REQUIRE(rep.all_pass());
    json j = json::parse(report_to_string(rep));
    conforms(j, schema);
  }
}

TEST_CASE("spec thin example selects indices 0 1 13") {
  json config = {{"kind", "thin"}, {"generator", "cyclic:2"}, {"depth", 2},
                 {"mode", "apriori"}};
  Report rep = run_scenario(config);
  REQUIRE(rep.all_pass());
  auto j = report_to_json(rep);
  bool found = false;
  for (const auto& c : j["checks"])
    if (c["name"] == "selected-indices") {
      found = true;
      REQUIRE(c["tag"] == "dkorl");
      REQUIRE(c["witness"] == "(0, 1, 13)");
      REQUIRE(c["values"]["n_2"]["num"] == "13");
    }
  REQUIRE(found);
}

TEST_CASE("reports are byte-identical across reruns") {
  std::vector<json> configs = {
      {{"kind", "demo"}, {"generator", "cyclic:2"}, {"depth", 2},
       {"samples", 50}, {"seed", 3}},
      {{"kind", "full-torus-pipeline"}, {"atlas", "two-arcs"}, {"depth", 2}},
      {{"kind", "thin"}, {"generator", "cyclic:3"}, {"depth", 2},
       {"mode", "exact"}},
  };
  for (const auto& config : configs) {
    INFO(config.dump());
    std::string a = report_to_string(run_scenario(config));
    std::string b = report_to_string(run_scenario(config));
    REQUIRE(a == b);
  }
}

TEST_CASE("reports do not depend on the worker count") {
  json config = {{"kind", "levelsets"}, {"generator", "cyclic:2"},
                 {"exponents", {0, 1, 3}}};
  ::setenv("SMALLGROUP_LAB_THREADS", "1", 1);
  std::string serial = report_to_string(run_scenario(config));
  ::setenv("SMALLGROUP_LAB_THREADS", "4", 1);
  std::string parallel = report_to_string(run_scenario(config));
  ::unsetenv("SMALLGROUP_LAB_THREADS");
  REQUIRE(serial == parallel);
}

TEST_CASE("seed resolution and the rng block") {
  json with_rng = {{"kind", "demo"}, {"generator", "cyclic:2"}, {"depth", 2},
                   {"samples", 10}, {"seed", 5}};
  auto j = report_to_json(run_scenario(with_rng));
  REQUIRE(j["rng"]["seed"] == 5);

  ScenarioOptions opts;
  opts.seed = 7;
  j = report_to_json(run_scenario(with_rng, opts));
  REQUIRE(j["rng"]["seed"] == 7);

  json no_rng = {{"kind", "thin"}, {"generator", "cyclic:2"}, {"depth", 2},
                 {"mode", "apriori"}};
  REQUIRE(!report_to_json(run_scenario(no_rng)).contains("rng"));

  json zero_samples = {{"kind", "game"}, {"space", {2, 2}}, {"samples", 0},
                       {"dense", json::array({json::array(
                                     {json::array({1, 1})})})}};
  REQUIRE(!report_to_json(run_scenario(zero_samples)).contains("rng"));
}

TEST_CASE("config validation rejects malformed scenarios") {
  REQUIRE_THROWS_AS(run_scenario(json::array()), ConfigError);
  REQUIRE_THROWS_AS(run_scenario(json{{"generator", "cyclic:2"}}),
                    ConfigError);
  REQUIRE_THROWS_AS(run_scenario(json{{"kind", "unknown"}}), ConfigError);
  REQUIRE_THROWS_AS(
      run_scenario(json{{"kind", "thin"}, {"generator", "cyclic:2"},
                        {"depth", 2}, {"mode", "apriori"}, {"typo", 1}}),
      ConfigError);
  REQUIRE_THROWS_AS(
      run_scenario(json{{"kind", "thin"}, {"generator", "cyclic:2:0,1"},
                        {"depth", 2}}),
      ConfigError);
  REQUIRE_THROWS_AS(
      run_scenario(json{{"kind", "thin"}, {"generator", "cyclic:2"},
                        {"depth", 0}}),
      ConfigError);
  REQUIRE_THROWS_AS(
      run_scenario(json{{"kind", "levelsets"}, {"generator", "cyclic:2"}}),
      ConfigError);
  REQUIRE_THROWS_AS(
      run_scenario(json{{"kind", "levelsets"}, {"generator", "cyclic:2"},
                        {"exponents", {0, 1}}, {"tower", json::object()}}),
      ConfigError);
  REQUIRE_THROWS_AS(
      run_scenario(json{{"kind", "game"}, {"space", {2, 2}},
                        {"dense", json::array()}, {"stages", 1}}),
      ConfigError);
  REQUIRE_THROWS_AS(
      run_scenario(json{{"kind", "torus"}, {"atlas", "two-arcs"},
                        {"dim", 2}}),
      ConfigError);
  REQUIRE_THROWS_AS(
      run_scenario(json{{"kind", "demo"}, {"generator", "cyclic:2"},
                        {"depth", 2}, {"parity", "sideways"}}),
      ConfigError);
}

TEST_CASE("failing checks surface in the summary") {
  // A window family with a coarse set after a fine one is rejected while
  // parsing; a non-dense handcrafted set must fail its record instead.
  json config = {{"kind", "game"}, {"space", {2, 2}}, {"samples", 0},
                 {"dense", json::array({json::array({json::array({1, 1})}),
                                        json::array({json::array({1, 1}),
                                                     json::array({2, 1})})})}};
  Report rep = run_scenario(config);
  REQUIRE(!rep.all_pass());
  auto j = report_to_json(rep);
  REQUIRE(j["summary"]["failed"].get<int>() >= 1);
  bool dense_failed = false;
  for (const auto& c : j["checks"])
    if (c["name"] == "stage-set-dense k=1" && c["status"] == "fail")
      dense_failed = true;
  REQUIRE(dense_failed);
}

TEST_CASE("tower tables feed the levelsets scenario") {
  json table = {
      {"levels", json::array({json{{"table", json::array({json::array({0})})}},
                              json{{"table",
                                    json::array({json::array({0, 1}),
                                                 json::array({1, 0})})}}})},
      {"bonds", json::array({json::array({0, 0})})}};
  json config = {{"kind", "levelsets"}, {"tower", table}};
  Report rep = run_scenario(config);
  REQUIRE(rep.all_pass());
  auto j = report_to_json(rep);
  REQUIRE(j["scenario"].contains("tower"));
  REQUIRE(j["scenario"]["j_max"] == 1);
}
