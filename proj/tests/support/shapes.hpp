#pragma once

// Checks JSON payloads against the key/type table in docs/api-shapes.json.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace shapes {

using Json = nlohmann::ordered_json;

class Checker {
 public:
  explicit Checker(const std::string& path) {
    std::ifstream in(path);
    table_ = Json::parse(in)["payloads"];
  }

  // Returns human-readable mismatches; empty means the payload conforms.
  std::vector<std::string> check(const Json& value, const std::string& payload) const {
    std::vector<std::string> errors;
    check_payload(value, payload, payload, errors);
    return errors;
  }

 private:
  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) out.push_back(part);
    return out;
  }

  bool matches(const Json& v, const std::string& type, const std::string& where, std::vector<std::string>& errors) const {
    if (type == "string") return v.is_string();
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer();
    if (type == "boolean") return v.is_boolean();
    if (type == "array") return v.is_array();
    if (type == "object") return v.is_object();
    if (type == "null") return v.is_null();
    if (type.size() > 3 && type.front() == '[' && type[1] == '$') {
      if (!v.is_array()) return false;
      const std::string inner = type.substr(2, type.size() - 3);
      for (std::size_t i = 0; i < v.size(); ++i)
        check_payload(v[i], inner, where + "[" + std::to_string(i) + "]", errors);
      return true;
    }
    if (type.front() == '$') {
      if (!v.is_object()) return false;
      check_payload(v, type.substr(1), where, errors);
      return true;
    }
    errors.push_back("unknown type '" + type + "' in shape table");
    return true;
  }

  void check_payload(const Json& value, const std::string& payload, const std::string& where,
                     std::vector<std::string>& errors) const {
    if (!table_.contains(payload)) {
      errors.push_back("no shape named '" + payload + "'");
      return;
    }
    if (!value.is_object()) {
      errors.push_back(where + ": expected an object");
      return;
    }
    for (const auto& [raw_key, type] : table_[payload].items()) {
      const bool optional = raw_key.back() == '?';
      const std::string key = optional ? raw_key.substr(0, raw_key.size() - 1) : raw_key;
      if (!value.contains(key)) {
        if (!optional) errors.push_back(where + ": missing key '" + key + "'");
        continue;
      }
      bool ok = false;
      for (const auto& alt : split(type.get<std::string>(), '|')) {
        std::vector<std::string> nested;
        if (matches(value[key], alt, where + "." + key, nested)) {
          if (nested.empty()) {
            ok = true;
            break;
          }
          if (split(type.get<std::string>(), '|').size() == 1) {
            errors.insert(errors.end(), nested.begin(), nested.end());
            ok = true;
            break;
          }
        }
      }
      if (!ok) errors.push_back(where + "." + key + ": expected " + type.get<std::string>());
    }
  }

  Json table_;
};

}  // namespace shapes
