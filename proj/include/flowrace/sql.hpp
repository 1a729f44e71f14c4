#pragma once

// Parser for the single-statement SQL subset the entity extractor supports:
// SELECT / INSERT / UPDATE / DELETE over one table with a conjunctive WHERE.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowrace::sql {

enum class StatementKind { select, insert, update, remove };

struct Predicate {
  std::string column;
  std::string op;                      // "=", "<", "like", "in", "is", ...
  std::optional<std::string> literal;  // set only for a plain literal operand
};

struct Assignment {
  std::string column;
  std::optional<std::string> literal;  // nullopt when the value is an expression
};

struct Statement {
  StatementKind kind = StatementKind::select;
  std::string table;
  bool all_columns = false;          // SELECT * (DELETE is handled by the caller)
  std::vector<std::string> columns;  // SELECT list / INSERT column list / UPDATE SET targets
  std::vector<Assignment> values;    // INSERT values and UPDATE SET values, paired with columns
  bool has_where = false;
  std::vector<Predicate> where;
};

// Thrown for anything outside the subset. `table` is filled when the
// statement got far enough to name one.
class UnsupportedSql : public std::runtime_error {
 public:
  UnsupportedSql(const std::string& reason, std::string table_name = {})
      : std::runtime_error(reason), table(std::move(table_name)) {}
  std::string table;
};

Statement parse(std::string_view text);

}  // namespace flowrace::sql
