#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <smallgroup/rational.hpp>
#include <smallgroup/version.hpp>

namespace smallgroup {

// One verified fact.  The tag names the check's rule in the documented
// check-tag vocabulary; values carry the exact rationals the verdict was
// computed from.
struct CheckRecord {
  std::string name;
  std::string tag;
  bool pass = false;
  std::string witness;
  std::vector<std::pair<std::string, Rat>> values;
};

// Full run result.  Reports carry no clocks or host data: identical scenario
// and seed must serialize byte-identically.
struct Report {
  nlohmann::ordered_json scenario;
  bool has_rng = false;
  std::uint64_t seed = 0;
  std::vector<CheckRecord> checks;

  std::size_t passed() const {
    std::size_t n = 0;
    for (const CheckRecord& c : checks) n += c.pass ? 1 : 0;
    return n;
  }
  std::size_t failed() const { return checks.size() - passed(); }
  bool all_pass() const { return failed() == 0; }
};

inline nlohmann::ordered_json check_to_json(const CheckRecord& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["tag"] = c.tag;
  j["status"] = c.pass ? "pass" : "fail";
  if (!c.witness.empty()) j["witness"] = c.witness;
  if (!c.values.empty()) {
    nlohmann::ordered_json vals;
    for (const auto& [key, value] : c.values) vals[key] = rat_to_json(value);
    j["values"] = std::move(vals);
  }
  return j;
}

inline nlohmann::ordered_json report_to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["scenario"] = r.scenario;
  if (r.has_rng) j["rng"] = {{"algorithm", "mt19937_64"}, {"seed", r.seed}};
  j["checks"] = nlohmann::ordered_json::array();
  for (const CheckRecord& c : r.checks) j["checks"].push_back(check_to_json(c));
  j["summary"] = {{"total", r.checks.size()},
                  {"passed", r.passed()},
                  {"failed", r.failed()}};
  return j;
}

inline std::string report_to_string(const Report& r) {
  return report_to_json(r).dump(2) + "\n";
}

inline std::string render_table(const Report& r) {
  std::size_t name_w = 4, tag_w = 3;
  for (const CheckRecord& c : r.checks) {
    name_w = std::max(name_w, c.name.size());
    tag_w = std::max(tag_w, c.tag.size());
  }
  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  std::string out = "scenario: " + r.scenario.dump() + "\n";
  if (r.has_rng)
    out += "rng: mt19937_64 seed " + std::to_string(r.seed) + "\n";
  out += pad("NAME", name_w) + "  " + pad("TAG", tag_w) + "  STATUS  DETAIL\n";
  for (const CheckRecord& c : r.checks) {
    std::string detail = c.witness;
    for (const auto& [key, value] : c.values) {
      if (!detail.empty()) detail += "; ";
      detail += key + " = " + rat_str(value);
    }
    out += pad(c.name, name_w) + "  " + pad(c.tag, tag_w) + "  " +
           (c.pass ? "pass  " : "FAIL  ") + "  " + detail + "\n";
  }
  out += "summary: " + std::to_string(r.checks.size()) + " checks, " +
         std::to_string(r.passed()) + " passed, " + std::to_string(r.failed()) +
         " failed\n";
  return out;
}

}  // namespace smallgroup
