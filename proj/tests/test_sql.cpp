#include <gtest/gtest.h>

#include "flowrace/entity.hpp"
#include "flowrace/sql.hpp"
#include "sql_golden.hpp"

using namespace flowrace;
using namespace flowrace::check;

TEST(SqlGolden, HasEnoughStatements) { EXPECT_GE(kGolden.size(), 30u); }

TEST(SqlGolden, Entities) {
  const auto rules = PkRules::defaults();
  for (const auto& g : kGolden) {
    SCOPED_TRACE(g.sql);
    const auto a = extract_sql(span_for(g.sql), rules);
    EXPECT_EQ(a.op_class, g.op);
    EXPECT_EQ(a.creation, g.creation);
    EXPECT_EQ(a.entity.space, g.space);
    EXPECT_EQ(a.entity.precision, g.precision);
    if (g.precision == Precision::exact) {
      EXPECT_EQ(a.entity.keys, g.keys);
    } else {
      EXPECT_TRUE(a.entity.keys.empty());
    }
    if (g.columns == std::set<std::string>{"*"}) {
      EXPECT_TRUE(a.entity.columns.all);
    } else {
      EXPECT_FALSE(a.entity.columns.all);
      EXPECT_EQ(a.entity.columns.names, g.columns);
    }
    if (g.precision == Precision::imprecise) {
      EXPECT_FALSE(a.note.empty());
    }
    EXPECT_EQ(a.entity.instance, (StoreInstance{"db:3306", "shop"}));
  }
}

TEST(SqlParse, Shapes) {
  auto st = sql::parse("UPDATE orders SET status = 'PAID', total = total + 1 WHERE id = 7");
  EXPECT_EQ(st.kind, sql::StatementKind::update);
  EXPECT_EQ(st.columns, (std::vector<std::string>{"status", "total"}));
  ASSERT_EQ(st.values.size(), 2u);
  EXPECT_EQ(st.values[0].literal, "PAID");
  EXPECT_FALSE(st.values[1].literal.has_value());
  ASSERT_EQ(st.where.size(), 1u);
  EXPECT_EQ(st.where[0].column, "id");
  EXPECT_EQ(st.where[0].op, "=");

  st = sql::parse("SELECT * FROM t");
  EXPECT_TRUE(st.all_columns);
  EXPECT_FALSE(st.has_where);

  st = sql::parse("INSERT INTO tickets (id, seat_id) VALUES ('a', 'b')");
  EXPECT_EQ(st.kind, sql::StatementKind::insert);
  EXPECT_EQ(st.table, "tickets");
  EXPECT_EQ(st.columns, (std::vector<std::string>{"id", "seat_id"}));

  // identifier case survives parsing
  st = sql::parse("SELECT balance FROM Accounts WHERE accountId = 1");
  EXPECT_EQ(st.where[0].column, "accountId");
}

TEST(SqlParse, Unsupported) {
  EXPECT_THROW(sql::parse(""), sql::UnsupportedSql);
  EXPECT_THROW(sql::parse("DROP TABLE t"), sql::UnsupportedSql);
  EXPECT_THROW(sql::parse("SELECT a FROM t WHERE a = 'unterminated"), sql::UnsupportedSql);
  EXPECT_THROW(sql::parse("SELECT a FROM (SELECT 1) x"), sql::UnsupportedSql);
  try {
    sql::parse("SELECT a FROM t1, t2 WHERE id = 1");
    FAIL();
  } catch (const sql::UnsupportedSql& e) {
    EXPECT_EQ(e.table, "t1");
  }
}

TEST(PkRules, Tokens) {
  EXPECT_EQ(name_tokens("accountId"), (std::vector<std::string>{"account", "id"}));
  EXPECT_EQ(name_tokens("HTTPServerID"), (std::vector<std::string>{"http", "server", "id"}));
  EXPECT_EQ(name_tokens("order_id"), (std::vector<std::string>{"order", "id"}));
  EXPECT_EQ(name_tokens("x-request-key"), (std::vector<std::string>{"x", "request", "key"}));

  const auto rules = PkRules::defaults();
  EXPECT_TRUE(rules.is_key_column("t", "accountId"));
  EXPECT_TRUE(rules.is_key_column("t", "ORDER_ID"));
  EXPECT_FALSE(rules.is_key_column("t", "identity"));
  EXPECT_FALSE(rules.is_key_column("t", "valid"));
  EXPECT_FALSE(rules.is_key_column("t", "status"));

  PkRules custom = rules;
  custom.custom_rules["seats"] = {"name"};
  EXPECT_TRUE(custom.is_key_column("SEATS", "Name"));
  EXPECT_FALSE(custom.is_key_column("seats", "id"));
  const auto a = extract_sql(span_for("UPDATE seats SET remaining = remaining - 1 WHERE name = 'A1'"), custom);
  EXPECT_EQ(a.entity.precision, Precision::exact);
  EXPECT_EQ(a.entity.keys, (std::set<EntityKey>{{"name", "A1"}}));
}
