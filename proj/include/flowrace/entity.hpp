#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowrace/trace.hpp"

namespace flowrace {

enum class OpClass { read, write };
enum class Precision { exact, imprecise };

std::string to_string(OpClass c);
std::string to_string(Precision p);

// A set of column names, or the wildcard that overlaps every column set.
struct ColumnSet {
  bool all = false;
  std::set<std::string> names;

  static ColumnSet wildcard() { return {true, {}}; }
  static ColumnSet of(std::set<std::string> cols) { return {false, std::move(cols)}; }

  bool overlaps(const ColumnSet& other) const;
  bool operator==(const ColumnSet&) const = default;
};

using EntityKey = std::pair<std::string, std::string>;  // (field, value)

struct StateEntity {
  StoreInstance instance;
  StoreKind kind = StoreKind::sql;
  std::string space;  // table, topic, bucket or key prefix
  std::set<EntityKey> keys;
  ColumnSet columns = ColumnSet::wildcard();
  Precision precision = Precision::exact;

  bool operator==(const StateEntity&) const = default;

  bool shares_key(const StateEntity& other) const;
};

struct Access {
  SpanId data_span;
  StateEntity entity;
  OpClass op_class = OpClass::read;
  bool creation = false;  // implies op_class == write
  std::string note;       // reason when the entity is imprecise

  bool operator==(const Access&) const = default;
};

struct PkRules {
  // Case-insensitive patterns. A bare word matches a name token (names are
  // split on '_', '-' and camelCase boundaries); a pattern with '*' is a glob
  // over the whole lowercased name.
  std::vector<std::string> indicator_tokens;
  // table -> explicit key columns; a table listed here never uses indicators.
  std::map<std::string, std::vector<std::string>> custom_rules;

  static PkRules defaults();

  bool is_key_column(const std::string& table, const std::string& column) const;
};

// Splits an identifier into lowercase tokens ("accountId" -> account, id).
std::vector<std::string> name_tokens(std::string_view name);

Access extract_sql(const DataSpan& ds, const PkRules& rules);
Access extract_kv(const DataSpan& ds);
Access extract_mq(const DataSpan& ds);
Access extract_object(const DataSpan& ds);

// Dispatches on store_kind. Never throws for unrecognised operations: those
// come back with precision == imprecise.
Access extract_access(const DataSpan& ds, const PkRules& rules);

// One Access per data span, keyed by data span id.
std::map<SpanId, Access> extract_all(const TraceSet& ts, const PkRules& rules);
std::map<SpanId, Access> extract_all_serial(const TraceSet& ts, const PkRules& rules);

struct MqOp {
  std::string verb;  // "produce" or "consume"
  std::string topic;
  std::optional<std::string> partition_key;
  std::optional<std::string> msg_id;
};

// Accepts "produce topic=t key=k msg_id=m" and "produce(topic=t, key=k)".
std::optional<MqOp> parse_mq_op(std::string_view text);

enum class LockOp { none, acquire, release };

// Classifies a data span carrying lock_id by its command verb.
LockOp lock_op_kind(const DataSpan& ds);

}  // namespace flowrace
