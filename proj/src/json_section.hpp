#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dirac/config.hpp"
#include "dirac/error.hpp"

namespace dirac::detail {

// One JSON object under a dotted path; remembers which keys were read.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", label()));
  }

  void number(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(fmt::format("{}: expected a number", where(key)));
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(fmt::format("{}: must be finite", where(key)));
    }
  }

  void count(const char* key, std::size_t& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) {
        throw ConfigError(fmt::format("{}: expected a non-negative integer", where(key)));
      }
      out = v->get<std::size_t>();
    }
  }

  void boolean(const char* key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(fmt::format("{}: expected true or false", where(key)));
      out = v->get<bool>();
    }
  }

  void string(const char* key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(fmt::format("{}: expected a string", where(key)));
      out = v->get<std::string>();
    }
  }

  void numbers(const char* key, std::vector<double>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(fmt::format("{}: expected an array of numbers", where(key)));
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const Json& e = (*v)[i];
        if (!e.is_number() || !std::isfinite(e.get<double>())) {
          throw ConfigError(fmt::format("{}[{}]: expected a finite number", where(key), i));
        }
        out.push_back(e.get<double>());
      }
    }
  }

  /// Nested object, or nullptr if absent.
  const Json* object(const char* key) { return find(key); }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(fmt::format("{}: unknown key", where(item.key())));
    }
  }

 private:
  const Json* find(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string label() const { return path_.empty() ? "config" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace dirac::detail
