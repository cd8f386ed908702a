#pragma once

// Reading sweep records back from JSON (nlohmann). Kept apart from sweep.hpp
// so the core headers do not depend on a JSON library.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "entroscope/errors.hpp"
#include "entroscope/sweep.hpp"

namespace entroscope {

inline std::vector<SweepRecord> parse_json_records(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed records JSON: ") + e.what());
  }
  if (!doc.is_array()) throw InvalidArgument("records JSON must be an array");
  std::vector<SweepRecord> out;
  out.reserve(doc.size());
  for (const auto& j : doc) {
    if (!j.is_object() || !j.contains("a")) throw InvalidArgument("record without field 'a'");
    auto num = [&](const char* key) -> std::optional<double> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return j.at(key).get<double>();
    };
    SweepRecord r;
    r.a = j.at("a").get<double>();
    r.h = num("h");
    r.h_err = num("h_err");
    r.lambda = num("lambda");
    r.lambda_gap = num("lambda_gap");
    r.q = num("q");
    r.wr = num("wr");
    if (j.contains("window_period") && !j.at("window_period").is_null()) r.window_period = j.at("window_period").get<int>();
    r.window_center = num("window_center");
    r.holder = num("holder");
    out.push_back(r);
  }
  return out;
}

/// Records from either export format, detected by the first character.
inline std::vector<SweepRecord> parse_records(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return parse_json_records(text);
  return parse_csv(text);
}

}  // namespace entroscope
