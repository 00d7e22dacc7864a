#pragma once

// Strict-schema helpers shared by the JSON readers. Every failure is a
// ParseError carrying the JSON path of the offending value.

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidreason/error.hpp"

namespace vidreason::detail {

using nlohmann::json;

inline json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), source);
  }
}

inline void require_object(const json& value, const std::string& where) {
  if (!value.is_object()) throw ParseError("expected a JSON object", where);
}

inline void require_array(const json& value, const std::string& where) {
  if (!value.is_array()) throw ParseError("expected a JSON array", where);
}

inline void check_keys(const json& object, std::initializer_list<std::string_view> allowed,
                       const std::string& where) {
  require_object(object, where);
  for (const auto& [key, _] : object.items()) {
    bool known = false;
    for (auto name : allowed) known = known || key == name;
    if (!known) throw ParseError("unknown key '" + key + "'", where);
  }
}

inline const json& require_key(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) throw ParseError(std::string("missing key '") + key + "'", where);
  return *it;
}

inline std::string get_string(const json& value, const std::string& where) {
  if (!value.is_string()) throw ParseError("expected a string", where);
  return value.get<std::string>();
}

inline std::vector<std::string> get_string_array(const json& value, const std::string& where) {
  require_array(value, where);
  std::vector<std::string> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i)
    out.push_back(get_string(value[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline long long get_integer(const json& value, const std::string& where) {
  if (!value.is_number_integer()) throw ParseError("expected an integer", where);
  return value.get<long long>();
}

inline double get_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ParseError("expected a number", where);
  return value.get<double>();
}

inline bool get_bool(const json& value, const std::string& where) {
  if (!value.is_boolean()) throw ParseError("expected a boolean", where);
  return value.get<bool>();
}

inline std::string indexed(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

}  // namespace vidreason::detail
