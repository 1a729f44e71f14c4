#include <algorithm>

#include "flowrace/codec.hpp"
#include "flowrace/conflict.hpp"
#include "flowrace/oracle.hpp"

namespace flowrace {

namespace {

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out.push_back(c);
  }
  return out;
}

void flatten_into(const Json& doc, const std::string& prefix, std::map<std::string, Json>& out) {
  if (doc.is_object() && !doc.empty()) {
    for (auto it = doc.begin(); it != doc.end(); ++it) flatten_into(it.value(), prefix + "/" + escape_pointer(it.key()), out);
  } else if (doc.is_array() && !doc.empty()) {
    for (std::size_t i = 0; i < doc.size(); ++i) flatten_into(doc[i], prefix + "/" + std::to_string(i), out);
  } else {
    out[prefix] = doc;
  }
}

}  // namespace

std::map<std::string, Json> flatten(const Json& doc) {
  std::map<std::string, Json> out;
  flatten_into(doc, "", out);
  return out;
}

Normalizer::Normalizer(const NormalizationRules& rules)
    : volatile_(rules.volatile_fields.begin(), rules.volatile_fields.end()), set_paths_(rules.set_paths) {
  const auto has = [&](const char* c) { return rules.classes.count(c) > 0; };
  // Order matters: UUIDs contain hex runs, ISO stamps contain digit runs.
  if (has("uuid"))
    patterns_.emplace_back(
        std::regex("[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}"), "<uuid>");
  if (has("timestamp")) {
    patterns_.emplace_back(
        std::regex(R"(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:?\d{2})?)"), "<ts>");
    patterns_.emplace_back(std::regex(R"(\b1\d{9}(\d{3}){0,3}\b)"), "<ts>");
  }
  if (has("duration")) patterns_.emplace_back(std::regex(R"(\b\d+(\.\d+)?(ns|us|ms|s)\b)"), "<dur>");
  if (has("hex"))
    patterns_.emplace_back(std::regex(R"(\b(?=[0-9a-fA-F]*[0-9])(?=[0-9a-fA-F]*[a-fA-F])[0-9a-fA-F]{8,}\b)"), "<hex>");
  for (const auto& p : rules.extra_patterns) {
    try {
      patterns_.emplace_back(std::regex(p), "<masked>");
    } catch (const std::regex_error& e) {
      throw ConfigError("bad normalization pattern '" + p + "': " + e.what());
    }
  }
}

std::string Normalizer::text(std::string_view text) const {
  std::string s(text);
  for (const auto& [re, repl] : patterns_) s = std::regex_replace(s, re, repl);
  return s;
}

Json Normalizer::apply(const Json& doc) const { return apply_at(doc, ""); }

Json Normalizer::apply_at(const Json& doc, const std::string& path) const {
  if (doc.is_string()) return text(doc.get<std::string>());
  if (doc.is_object()) {
    Json out = Json::object();
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (volatile_.count(it.key())) continue;
      out[it.key()] = apply_at(it.value(), path + "/" + escape_pointer(it.key()));
    }
    return out;
  }
  if (doc.is_array()) {
    Json out = Json::array();
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(apply_at(doc[i], path + "/" + std::to_string(i)));
    const bool as_set = std::any_of(set_paths_.begin(), set_paths_.end(),
                                    [&](const std::string& p) { return glob_match(p, path); });
    if (as_set) {
      std::vector<Json> items(out.begin(), out.end());
      std::sort(items.begin(), items.end(), [](const Json& x, const Json& y) { return x.dump() < y.dump(); });
      out = Json(items);
    }
    return out;
  }
  return doc;
}

}  // namespace flowrace
