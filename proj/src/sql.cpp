#include "flowrace/sql.hpp"

#include <cctype>

#include "flowrace/codec.hpp"

namespace flowrace::sql {

namespace {

enum class Tok { ident, quoted_ident, string, dq_string, number, placeholder, op, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;  // identifiers lowercased; literals unquoted
  std::string raw;   // identifiers as written
  bool is(Tok k, std::string_view t) const { return kind == k && text == t; }
};

Token token(Tok kind, std::string text, std::string raw = {}) { return {kind, std::move(text), std::move(raw)}; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      out.push_back(token(Tok::ident, to_lower(s.substr(i, j - i)), std::string(s.substr(i, j - i))));
      i = j;
    } else if (c == '`') {
      const auto j = s.find('`', i + 1);
      if (j == std::string_view::npos) throw UnsupportedSql("unterminated quoted identifier");
      out.push_back(token(Tok::quoted_ident, to_lower(s.substr(i + 1, j - i - 1)), std::string(s.substr(i + 1, j - i - 1))));
      i = j + 1;
    } else if (c == '\'' || c == '"') {
      std::string lit;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < s.size()) {
        if (s[j] == '\\' && j + 1 < s.size()) {
          lit.push_back(s[j + 1]);
          j += 2;
        } else if (s[j] == c) {
          if (j + 1 < s.size() && s[j + 1] == c) {
            lit.push_back(c);
            j += 2;
          } else {
            closed = true;
            ++j;
            break;
          }
        } else {
          lit.push_back(s[j++]);
        }
      }
      if (!closed) throw UnsupportedSql("unterminated string literal");
      out.push_back(token(c == '\'' ? Tok::string : Tok::dq_string, lit));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      out.push_back(token(Tok::number, std::string(s.substr(i, j - i))));
      i = j;
    } else if (c == '?') {
      out.push_back(token(Tok::placeholder, "?"));
      ++i;
    } else if ((c == ':' || c == '$') && i + 1 < s.size() && is_ident_char(s[i + 1])) {
      std::size_t j = i + 1;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      out.push_back(token(Tok::placeholder, std::string(s.substr(i, j - i))));
      i = j;
    } else if (c == '<' || c == '>' || c == '!' || c == '=') {
      std::string op(1, c);
      if (i + 1 < s.size() && (s[i + 1] == '=' || (c == '<' && s[i + 1] == '>'))) op.push_back(s[i + 1]);
      if (op == "!") throw UnsupportedSql("unexpected '!'");
      out.push_back(token(Tok::op, op));
      i += op.size();
    } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '%' || c == '|') {
      out.push_back(token(Tok::op, std::string(1, c)));
      ++i;
    } else if (c == ',' || c == '(' || c == ')' || c == ';' || c == '.') {
      out.push_back(token(Tok::punct, std::string(1, c)));
      ++i;
    } else {
      throw UnsupportedSql(std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back(token(Tok::end, ""));
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Statement statement() {
    const auto& head = peek();
    if (head.is(Tok::ident, "select")) return select();
    if (head.is(Tok::ident, "insert")) return insert();
    if (head.is(Tok::ident, "update")) return update();
    if (head.is(Tok::ident, "delete")) return remove();
    throw UnsupportedSql("unsupported statement '" + head.text + "'");
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return t_[std::min(pos_ + ahead, t_.size() - 1)]; }
  const Token& next() { return t_[pos_ < t_.size() - 1 ? pos_++ : pos_]; }
  bool accept_kw(std::string_view kw) {
    if (peek().is(Tok::ident, kw)) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_punct(std::string_view p) {
    if (peek().is(Tok::punct, p)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected '" + std::string(kw) + "'");
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("expected '" + std::string(p) + "'");
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw UnsupportedSql(why + " near '" + peek().text + "'", table_.empty() ? guess_table() : table_);
  }

  // first name after FROM / INTO / UPDATE, for statements the parser gave up on
  std::string guess_table() const {
    for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
      const auto& k = t_[i];
      if (!(k.is(Tok::ident, "from") || k.is(Tok::ident, "into") || k.is(Tok::ident, "update"))) continue;
      std::size_t j = i + 1;
      std::string name;
      while (j < t_.size() && (t_[j].kind == Tok::ident || t_[j].kind == Tok::quoted_ident || t_[j].kind == Tok::dq_string)) {
        name = t_[j].kind == Tok::dq_string ? t_[j].text : t_[j].raw;
        if (j + 1 < t_.size() && t_[j + 1].is(Tok::punct, ".")) {
          j += 2;
        } else {
          break;
        }
      }
      if (!name.empty() && !(t_[i + 1].kind == Tok::ident && reserved(t_[i + 1].text))) return name;
    }
    return {};
  }

  static bool reserved(const std::string& w) {
    static const char* kWords[] = {"select", "from",  "where", "and",    "or",    "not",   "order", "group",
                                   "by",     "limit", "join",  "inner",  "left",  "right", "on",    "set",
                                   "values", "into",  "for",   "having", "union", "as",    "offset"};
    for (const char* k : kWords)
      if (w == k) return true;
    return false;
  }

  // identifier, optionally qualified (a.b); returns the last component.
  std::string column_name(bool callable = true) {
    const auto& tok = next();
    if (tok.kind != Tok::ident && tok.kind != Tok::quoted_ident && tok.kind != Tok::dq_string)
      fail("expected column name");
    if (tok.kind == Tok::ident && reserved(tok.text)) fail("expected column name");
    std::string name = tok.kind == Tok::dq_string ? tok.text : tok.raw;
    while (accept_punct(".")) {
      const auto& part = next();
      if (part.kind != Tok::ident && part.kind != Tok::quoted_ident && part.kind != Tok::dq_string)
        fail("expected name after '.'");
      name = part.kind == Tok::dq_string ? part.text : part.raw;
    }
    if (callable && peek().is(Tok::punct, "(")) fail("function calls are not supported");
    return name;
  }

  void table_ref() {
    table_ = column_name();
    // optional alias
    if (accept_kw("as")) {
      column_name();
    } else if ((peek().kind == Tok::ident && !reserved(peek().text)) || peek().kind == Tok::quoted_ident) {
      next();
    }
    if (peek().is(Tok::punct, ",") || peek().is(Tok::ident, "join") || peek().is(Tok::ident, "inner") ||
        peek().is(Tok::ident, "left") || peek().is(Tok::ident, "right"))
      fail("joins are not supported");
  }

  std::optional<std::string> literal_value() {
    const auto& tok = peek();
    if (tok.kind == Tok::string || tok.kind == Tok::dq_string || tok.kind == Tok::number) {
      next();
      return tok.text;
    }
    if (tok.is(Tok::op, "-") && peek(1).kind == Tok::number) {
      next();
      return "-" + next().text;
    }
    if (tok.is(Tok::ident, "null") || tok.is(Tok::ident, "true") || tok.is(Tok::ident, "false")) {
      next();
      return tok.text;
    }
    return std::nullopt;
  }

  // Consumes an expression up to a top-level ',' / ')' / keyword boundary.
  // Returns the literal when the whole expression is one literal.
  std::optional<std::string> value_expr() {
    const std::size_t start = pos_;
    auto lit = literal_value();
    if (lit && at_expr_boundary()) return lit;
    pos_ = start;
    int depth = 0;
    std::size_t consumed = 0;
    while (peek().kind != Tok::end) {
      const auto& tok = peek();
      if (depth == 0 && (tok.is(Tok::punct, ",") || tok.is(Tok::punct, ")") || tok.is(Tok::punct, ";") ||
                         tok.is(Tok::ident, "where") || tok.is(Tok::ident, "and") || tok.is(Tok::ident, "or") ||
                         tok.is(Tok::ident, "order") || tok.is(Tok::ident, "limit")))
        break;
      if (tok.is(Tok::ident, "select")) fail("subqueries are not supported");
      if (tok.is(Tok::punct, "(")) ++depth;
      if (tok.is(Tok::punct, ")")) --depth;
      next();
      ++consumed;
    }
    if (consumed == 0) fail("expected value");
    return std::nullopt;
  }

  bool at_expr_boundary() const {
    const auto& tok = peek();
    return tok.kind == Tok::end || tok.is(Tok::punct, ",") || tok.is(Tok::punct, ")") || tok.is(Tok::punct, ";") ||
           tok.is(Tok::ident, "where") || tok.is(Tok::ident, "and") || tok.is(Tok::ident, "or") ||
           tok.is(Tok::ident, "order") || tok.is(Tok::ident, "limit") || tok.is(Tok::ident, "for");
  }

  Predicate predicate() {
    if (accept_kw("not")) fail("negated predicates are not supported");
    Predicate p;
    p.column = column_name();
    const auto& tok = peek();
    if (tok.kind == Tok::op && (tok.text == "=" || tok.text == "<" || tok.text == ">" || tok.text == "<=" ||
                                tok.text == ">=" || tok.text == "<>" || tok.text == "!=")) {
      p.op = next().text;
      p.literal = value_expr();
    } else if (accept_kw("like")) {
      p.op = "like";
      value_expr();
    } else if (accept_kw("is")) {
      p.op = "is";
      accept_kw("not");
      expect_kw("null");
    } else if (accept_kw("in")) {
      p.op = "in";
      expect_punct("(");
      int depth = 1;
      while (depth > 0 && peek().kind != Tok::end) {
        if (peek().is(Tok::ident, "select")) fail("subqueries are not supported");
        if (peek().is(Tok::punct, "(")) ++depth;
        if (peek().is(Tok::punct, ")")) --depth;
        next();
      }
    } else if (accept_kw("between")) {
      p.op = "between";
      value_expr();
      expect_kw("and");
      value_expr();
    } else {
      fail("unsupported predicate");
    }
    return p;
  }

  void where_clause(Statement& st) {
    if (!accept_kw("where")) return;
    st.has_where = true;
    for (;;) {
      if (accept_punct("(")) {
        // Parenthesised conjunct: only a single predicate is accepted inside.
        st.where.push_back(predicate());
        if (peek().is(Tok::ident, "or") || peek().is(Tok::ident, "and"))
          fail("nested boolean expressions are not supported");
        expect_punct(")");
      } else {
        st.where.push_back(predicate());
      }
      if (peek().is(Tok::ident, "or")) fail("disjunctions are not supported");
      if (!accept_kw("and")) break;
    }
  }

  void trailing_clauses() {
    if (accept_kw("order")) {
      expect_kw("by");
      do {
        column_name();
        if (!accept_kw("asc")) accept_kw("desc");
      } while (accept_punct(","));
    }
    if (accept_kw("limit")) {
      if (next().kind != Tok::number) fail("expected LIMIT count");
      if (accept_punct(",") || accept_kw("offset"))
        if (next().kind != Tok::number) fail("expected OFFSET count");
    }
    if (accept_kw("for")) expect_kw("update");
  }

  void finish() {
    accept_punct(";");
    if (peek().kind != Tok::end) fail("unexpected trailing input");
  }

  Statement select() {
    expect_kw("select");
    Statement st;
    st.kind = StatementKind::select;
    accept_kw("distinct");
    if (peek().is(Tok::op, "*")) {
      next();
      st.all_columns = true;
    } else {
      do {
        // qualified star: t.*
        if (peek().kind == Tok::ident && peek(1).is(Tok::punct, ".") && peek(2).is(Tok::op, "*")) {
          pos_ += 3;
          st.all_columns = true;
          continue;
        }
        st.columns.push_back(column_name());
        if (accept_kw("as")) {
          column_name();
        } else if (peek().kind == Tok::ident && !reserved(peek().text)) {
          next();
        }
      } while (accept_punct(","));
    }
    expect_kw("from");
    table_ref();
    st.table = table_;
    where_clause(st);
    if (peek().is(Tok::ident, "group") || peek().is(Tok::ident, "having") || peek().is(Tok::ident, "union"))
      fail("aggregation and unions are not supported");
    trailing_clauses();
    finish();
    return st;
  }

  Statement insert() {
    expect_kw("insert");
    if (peek().is(Tok::ident, "ignore")) fail("INSERT IGNORE is not supported");
    expect_kw("into");
    Statement st;
    st.kind = StatementKind::insert;
    table_ = column_name(false);
    st.table = table_;
    if (!accept_punct("(")) fail("INSERT without a column list is not supported");
    do {
      st.columns.push_back(column_name());
    } while (accept_punct(","));
    expect_punct(")");
    if (!accept_kw("values")) {
      if (!accept_kw("value")) fail("expected VALUES");
    }
    expect_punct("(");
    do {
      st.values.push_back({"", value_expr()});
    } while (accept_punct(","));
    expect_punct(")");
    if (peek().is(Tok::punct, ",")) fail("multi-row INSERT is not supported");
    if (peek().is(Tok::ident, "on")) fail("INSERT ... ON DUPLICATE is not supported");
    if (st.values.size() != st.columns.size()) fail("column and value counts differ");
    for (std::size_t i = 0; i < st.columns.size(); ++i) st.values[i].column = st.columns[i];
    finish();
    return st;
  }

  Statement update() {
    expect_kw("update");
    Statement st;
    st.kind = StatementKind::update;
    table_ref();
    st.table = table_;
    expect_kw("set");
    do {
      Assignment a;
      a.column = column_name();
      if (!peek().is(Tok::op, "=")) fail("expected '=' in SET");
      next();
      a.literal = value_expr();
      st.columns.push_back(a.column);
      st.values.push_back(a);
    } while (accept_punct(","));
    where_clause(st);
    trailing_clauses();
    finish();
    return st;
  }

  Statement remove() {
    expect_kw("delete");
    expect_kw("from");
    Statement st;
    st.kind = StatementKind::remove;
    table_ref();
    st.table = table_;
    where_clause(st);
    trailing_clauses();
    finish();
    return st;
  }

  std::vector<Token> t_;
  std::size_t pos_ = 0;
  std::string table_;
};

}  // namespace

Statement parse(std::string_view text) {
  Parser p(tokenize(text));
  return p.statement();
}

}  // namespace flowrace::sql
