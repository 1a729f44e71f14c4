#pragma once

#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowrace/interleave.hpp"

namespace flowrace {

struct NormalizationRules {
  // Token classes: "timestamp", "uuid", "hex", "duration".
  std::set<std::string> classes = {"timestamp", "uuid", "hex", "duration"};
  std::vector<std::string> extra_patterns;   // ECMAScript regexes, replaced by <masked>
  std::vector<std::string> volatile_fields;  // JSON object keys dropped before comparing bodies
  std::vector<std::string> set_paths;        // JSON pointer globs whose arrays compare as multisets

  bool operator==(const NormalizationRules&) const = default;
};

class Normalizer {
 public:
  explicit Normalizer(const NormalizationRules& rules = {});

  std::string text(std::string_view text) const;
  // Strings inside the document are normalized, volatile keys dropped and
  // set-semantics arrays sorted.
  Json apply(const Json& doc) const;

 private:
  Json apply_at(const Json& doc, const std::string& path) const;

  std::vector<std::pair<std::regex, std::string>> patterns_;
  std::set<std::string> volatile_;
  std::vector<std::string> set_paths_;
};

enum class InvariantKind { expect, relation, tolerate };

std::string to_string(InvariantKind k);

struct StateInvariant {
  std::string name;
  std::string path;  // glob over JSON pointers of leaves in the state document
  InvariantKind kind = InvariantKind::expect;
  std::string op = "==";  // relation only: == != < <= > >=
  Json value;

  bool operator==(const StateInvariant&) const = default;
};

struct OracleConfig {
  std::vector<std::string> response_whitelist;
  std::vector<StateInvariant> state_invariants;
  NormalizationRules normalization;

  bool operator==(const OracleConfig&) const = default;

  // Throws ConfigError for duplicate invariant names, bad operators or regexes.
  void validate() const;
};

// JSON pointer of every leaf (scalars, empty arrays and objects) -> value.
std::map<std::string, Json> flatten(const Json& doc);

struct ServiceDelta {
  std::string service;
  std::vector<std::string> forward_only;
  std::vector<std::string> reverse_only;

  bool operator==(const ServiceDelta&) const = default;
};

struct ResponseDelta {
  int role = 0;  // 0 = request a, 1 = request b
  SpanId request;
  std::string endpoint;
  std::string forward_status;
  std::string reverse_status;
  std::string forward_body;
  std::string reverse_body;
  std::vector<std::string> paths;  // differing JSON pointers; empty for byte comparison
  bool byte_compared = false;      // a body did not decode as JSON

  bool operator==(const ResponseDelta&) const = default;
};

struct StateDelta {
  std::string path;
  Json forward;
  Json reverse;
  std::string rule;  // invariant that made this delta count, if any

  bool operator==(const StateDelta&) const = default;
};

struct Verdict {
  CandidatePair pair;
  std::optional<std::vector<ServiceDelta>> service_diff;
  std::optional<std::vector<ResponseDelta>> response_diff;
  std::optional<std::vector<StateDelta>> state_diff;
  std::vector<StateDelta> tolerated;  // deltas covered by tolerance rules
  bool is_bug = false;
  bool warning = false;  // no evidence, but tolerated state deltas exist

  bool operator==(const Verdict&) const = default;
};

std::optional<std::vector<ServiceDelta>> service_level(const InterleaveResult& res, const OracleConfig& cfg);
std::optional<std::vector<ResponseDelta>> response_level(const InterleaveResult& res, const OracleConfig& cfg);
std::optional<std::vector<StateDelta>> state_level(const InterleaveResult& res, const OracleConfig& cfg,
                                                   std::vector<StateDelta>* tolerated = nullptr);

// All three stages always run.
Verdict judge(const InterleaveResult& res, const OracleConfig& cfg);

}  // namespace flowrace
