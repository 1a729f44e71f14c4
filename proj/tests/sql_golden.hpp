#pragma once

// Hand-written expected entities for SQL statements, shared by the unit
// tests and the acceptance binary.

#include <set>
#include <string>
#include <vector>

#include "flowrace/entity.hpp"
#include "flowrace/sql.hpp"

namespace flowrace::check {

struct Golden {
  const char* sql;
  OpClass op;
  bool creation;
  const char* space;
  std::set<EntityKey> keys;
  std::set<std::string> columns;  // {"*"} for the wildcard
  Precision precision;
};

inline const OpClass R = OpClass::read;
inline const OpClass W = OpClass::write;
inline const Precision X = Precision::exact;
inline const Precision I = Precision::imprecise;

// Expected entities written out by hand from the key-indicator defaults
// (id, uid, guid, key, serial, *_id). Imprecise entities carry no keys and
// the wildcard column set.
inline const std::vector<Golden> kGolden = {
    // key detection
    {"SELECT status FROM orders WHERE id = 7", R, false, "orders", {{"id", "7"}}, {"status"}, X},
    {"SELECT id, status FROM orders WHERE account_id='4d2a46c7'", R, false, "orders", {{"account_id", "4d2a46c7"}}, {"id", "status"}, X},
    {"SELECT balance FROM accounts WHERE accountId='4d2a46c7'", R, false, "accounts", {{"accountid", "4d2a46c7"}}, {"balance"}, X},
    {"select balance from accounts where accountId = 4d2a46c7", R, false, "accounts", {{"accountid", "4d2a46c7"}}, {"balance"}, X},
    {"SELECT name FROM users WHERE userUID = 'u-1'", R, false, "users", {{"useruid", "u-1"}}, {"name"}, X},
    {"SELECT v FROM kvt WHERE `key` = 'k1'", R, false, "kvt", {{"key", "k1"}}, {"v"}, X},
    {"SELECT total FROM orders WHERE orderID = 12 AND status = 'NEW'", R, false, "orders", {{"orderid", "12"}}, {"total"}, X},
    {"SELECT a FROM t WHERE device_serial = 'SN9' AND region = 'eu'", R, false, "t", {{"device_serial", "SN9"}}, {"a"}, X},
    {"SELECT a FROM t WHERE x_id = 1 AND y_id = 2", R, false, "t", {{"x_id", "1"}, {"y_id", "2"}}, {"a"}, X},
    {"SELECT a FROM shop.t WHERE id = 1", R, false, "t", {{"id", "1"}}, {"a"}, X},
    {"SELECT \"Qty\" FROM \"Items\" WHERE \"ItemId\" = 5", R, false, "items", {{"itemid", "5"}}, {"qty"}, X},
    {"SELECT a FROM t WHERE id = -3;", R, false, "t", {{"id", "-3"}}, {"a"}, X},
    {"SELECT a FROM t WHERE t.id = 'it''s'", R, false, "t", {{"id", "it's"}}, {"a"}, X},
    // imprecise reads
    {"SELECT * FROM orders WHERE id = 7", R, false, "orders", {{"id", "7"}}, {"*"}, X},
    {"SELECT * FROM orders", R, false, "orders", {}, {"*"}, I},
    {"SELECT amount FROM payments WHERE amount > 100", R, false, "payments", {}, {"*"}, I},
    {"SELECT a FROM t WHERE id >= 3", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t WHERE id <> 3", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t WHERE name LIKE 'a%'", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t WHERE id IN (1, 2)", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t WHERE id IS NULL", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t WHERE id = ?", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t WHERE status = 'NEW'", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t WHERE id = 1 OR id = 2", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t JOIN u ON t.id = u.t_id WHERE t.id = 1", R, false, "t", {}, {"*"}, I},
    {"SELECT count(*) FROM t WHERE id = 1", R, false, "t", {}, {"*"}, I},
    {"SELECT a FROM t WHERE id = 1; DELETE FROM t WHERE id = 1", R, false, "t", {}, {"*"}, I},
    // writes
    {"UPDATE orders SET status='PAID' WHERE id=7", W, false, "orders", {{"id", "7"}}, {"status"}, X},
    {"UPDATE orders SET status = 'CANCELLED', note = 'x' WHERE id = 7 AND status = 'NEW'", W, false, "orders", {{"id", "7"}}, {"status", "note"}, X},
    {"UPDATE accounts SET balance = balance - 10 WHERE accountId = 'a1'", W, false, "accounts", {{"accountid", "a1"}}, {"balance"}, X},
    {"UPDATE money SET amount = 0, order_id = 'o-9' WHERE account = 'acc1'", W, false, "money", {{"order_id", "o-9"}}, {"amount", "order_id"}, X},
    {"UPDATE seats SET remaining = remaining - 1 WHERE name = 'A1'", W, false, "seats", {}, {"*"}, I},
    {"UPDATE t SET a = 1", W, false, "t", {}, {"*"}, I},
    {"UPDATE t SET a = 1 WHERE id < 5", W, false, "t", {}, {"*"}, I},
    {"INSERT INTO tickets (id, seat_id, passenger) VALUES ('T-1', 'A1', 'p1')", W, true, "tickets", {{"id", "T-1"}, {"seat_id", "A1"}}, {"id", "seat_id", "passenger"}, X},
    {"insert into payments (amount, id, order_id) values (100, 'pay-1', 'o1')", W, true, "payments", {{"id", "pay-1"}, {"order_id", "o1"}}, {"amount", "id", "order_id"}, X},
    {"INSERT INTO log (msg) VALUES ('hi')", W, true, "log", {}, {"*"}, I},
    {"INSERT INTO t VALUES (1, 2)", W, true, "t", {}, {"*"}, I},
    {"DELETE FROM orders WHERE id = 7", W, false, "orders", {{"id", "7"}}, {"*"}, X},
    {"DELETE FROM orders", W, false, "orders", {}, {"*"}, I},
    {"MERGE INTO t USING u ON t.id = u.id", W, false, "", {}, {"*"}, I},
};

inline DataSpan span_for(const std::string& sql) {
  DataSpan d;
  d.span_id = "d";
  d.parent_request = "r";
  d.instance = {"db:3306", "shop"};
  d.operation_text = sql;
  return d;
}


// Empty when the extracted access matches the expectation.
inline std::string golden_mismatch(const Golden& g, const PkRules& rules) {
  const auto a = extract_sql(span_for(g.sql), rules);
  if (a.op_class != g.op) return "op class";
  if (a.creation != g.creation) return "creation";
  if (a.entity.space != g.space) return "space " + a.entity.space;
  if (a.entity.precision != g.precision) return "precision";
  if (g.precision == Precision::exact ? a.entity.keys != g.keys : !a.entity.keys.empty()) return "keys";
  if (g.columns == std::set<std::string>{"*"}) {
    if (!a.entity.columns.all) return "columns";
  } else if (a.entity.columns.all || a.entity.columns.names != g.columns) {
    return "columns";
  }
  if (g.precision == Precision::imprecise && a.note.empty()) return "note";
  return {};
}

}  // namespace flowrace::check
