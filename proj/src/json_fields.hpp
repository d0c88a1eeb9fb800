#pragma once

// Strict typed reads from a JSON object: wrong types and unknown keys are
// configuration errors, missing keys keep the caller's default.

#include <cstdint>
#include <set>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "ocvl/errors.hpp"

namespace ocvl::detail {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seeds are read as size_t");

class JsonFields {
 public:
  JsonFields(const nlohmann::json& j, std::string context) : j_(j), ctx_(std::move(context)) {
    if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
  }

  void read(const char* key, std::size_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void read(const char* key, int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<int>();
    }
  }
  void read(const char* key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  /// Enum fields stored as names.
  template <class E, class Parse>
  void read_enum(const char* key, E& out, Parse parse) {
    std::string name;
    if (find(key) == nullptr) return;
    read(key, name);
    try {
      out = parse(name);
    } catch (const ConfigError& e) {
      throw ConfigError(ctx_ + "." + key + ": " + e.what());
    }
  }
  const nlohmann::json* object(const char* key) {
    const auto* v = find(key);
    if (v != nullptr && !v->is_object()) fail(key, "an object");
    return v;
  }

  /// Rejects keys that no read() asked for.
  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + ctx_ + "." + item.key() + "'");
    }
  }

 private:
  const nlohmann::json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw ConfigError("config key '" + ctx_ + "." + key + "' must be " + expected);
  }

  const nlohmann::json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

}  // namespace ocvl::detail
