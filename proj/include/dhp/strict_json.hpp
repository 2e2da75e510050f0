#pragma once
// Reads a JSON object while tracking which keys were consumed, so callers can
// reject unknown keys once they are done.

#include <set>
#include <string>

#include "dhp/error.hpp"
#include "json.hpp"

namespace dhp {

class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string context)
      : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw InputError(context_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return require<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw InputError(context_ + ": missing key '" + key + "'");
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(context_ + ": bad value for '" + key + "': " + e.what());
    }
  }

  const nlohmann::json& child(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw InputError(context_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace dhp
