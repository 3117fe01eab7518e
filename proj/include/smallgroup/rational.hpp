#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

#include <json.hpp>

#include "smallgroup/errors.hpp"

namespace smallgroup {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Int rat_num(const Rat& r) { return boost::multiprecision::numerator(r); }
inline Int rat_den(const Rat& r) { return boost::multiprecision::denominator(r); }

// Rationals serialize as decimal strings so arbitrary precision survives JSON.
inline nlohmann::ordered_json rat_to_json(const Rat& r) {
  nlohmann::ordered_json j;
  j["num"] = rat_num(r).str();
  j["den"] = rat_den(r).str();
  return j;
}

// Accepts "p/q", "p", or the {num,den} object form used in reports.
inline Rat rat_from_json(const nlohmann::json& j) {
  try {
    if (j.is_object()) {
      Int num(j.at("num").get<std::string>());
      Int den(j.at("den").get<std::string>());
      if (den == 0) throw ConfigError("rational with zero denominator");
      return Rat(num, den);
    }
    if (j.is_number_integer()) return Rat(Int(j.get<long long>()));
    std::string s = j.get<std::string>();
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rat(Int(s));
    Int num(s.substr(0, slash));
    Int den(s.substr(slash + 1));
    if (den == 0) throw ConfigError("rational with zero denominator");
    return Rat(num, den);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad rational literal: ") + e.what());
  }
}

inline std::string rat_str(const Rat& r) {
  if (rat_den(r) == 1) return rat_num(r).str();
  return rat_num(r).str() + "/" + rat_den(r).str();
}

}  // namespace smallgroup
