#pragma once

// Path-aware accessors shared by the scenario parser and the task runner.

#include <string>
#include <vector>

#include "cqm/errors.hpp"
#include "cqm/fields.hpp"
#include "json.hpp"

namespace cqm::detail {

using Json = nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError("expected an object", path);
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing required field '" + key + "'", path);
  return *it;
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError("expected a number", path);
  return j.get<double>();
}

inline int as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError("expected an integer", path);
  return j.get<int>();
}

inline std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError("expected a string", path);
  return j.get<std::string>();
}

inline double number_or(const Json& obj, const std::string& key, double fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, join(path, key));
}

inline int int_or(const Json& obj, const std::string& key, int fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_int(*it, join(path, key));
}

inline std::string string_or(const Json& obj, const std::string& key, const std::string& fallback,
                             const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_string(*it, join(path, key));
}

inline const Json& as_array(const Json& j, const std::string& path, std::size_t expected = 0) {
  if (!j.is_array()) throw ConfigError("expected an array", path);
  if (expected && j.size() != expected)
    throw ConfigError("expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()), path);
  return j;
}

inline Vec as_vec(const Json& j, const std::string& path, int expected) {
  as_array(j, path, static_cast<std::size_t>(expected));
  Vec v(expected);
  for (int i = 0; i < expected; ++i) v[i] = as_number(j[static_cast<std::size_t>(i)], index(path, static_cast<std::size_t>(i)));
  return v;
}

}  // namespace cqm::detail

namespace cqm::detail {

/// Gaussian packet exp(-|x-c|^2 / (4 w^2) + i p.x - i e t); e lets a test
/// state carry analytic time dependence.
struct PacketSpec {
  Vec centre;
  Vec momentum;
  double width = 1.0;
  double energy = 0.0;
};

inline PacketSpec parse_packet(const Json& j, const std::string& path, int n) {
  if (!j.is_object()) throw ConfigError("expected an object", path);
  PacketSpec s;
  s.centre = as_vec(require(j, "centre", path), join(path, "centre"), n);
  s.momentum = j.contains("momentum") ? as_vec(j["momentum"], join(path, "momentum"), n) : Vec(Vec::Zero(n));
  s.width = number_or(j, "width", 1.0, path);
  s.energy = number_or(j, "energy", 0.0, path);
  if (!(s.width > 0.0)) throw ConfigError("width must be positive", join(path, "width"));
  return s;
}

}  // namespace cqm::detail
