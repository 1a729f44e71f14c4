#include <gtest/gtest.h>

#include <sstream>

#include "flowrace/codec.hpp"
#include "flowrace/trace.hpp"

using namespace flowrace;

namespace {

TraceSet small_trace() {
  TraceSet ts;
  RequestSpan r;
  r.span_id = "r1";
  r.flow_id = {"f1", {}};
  r.service = "order-svc";
  r.method = "PUT";
  r.target = "/orders/7/pay";
  r.request_headers = {{"content-type", "application/json"}};
  r.request_body = R"({"amount":3})";
  r.response_status = std::int64_t{200};
  r.response_body = "ok";
  r.start_ts = 100;
  r.end_ts = 200;
  r.log_lines = {"2023-11-14T22:13:20.000000Z INFO order-svc: paid"};
  ts.request_spans.push_back(r);

  RequestSpan c = r;
  c.span_id = "r2";
  c.parent_span_id = "r1";
  c.service = "pay-svc";
  c.protocol = Protocol::rpc;
  c.response_status = std::string("OK");
  c.thread_tag = "main";
  c.log_lines.clear();
  c.start_ts = 110;
  c.end_ts = 150;
  ts.request_spans.push_back(c);

  DataSpan d;
  d.span_id = "d1";
  d.parent_request = "r2";
  d.instance = {"pay-mysql:3306", "paydb"};
  d.operation_text = "UPDATE payments SET state='paid' WHERE id=7";
  d.start_ts = 120;
  d.end_ts = 130;
  ts.data_spans.push_back(d);
  ts.source_meta = {{"scenario", "unit"}};
  return ts;
}

}  // namespace

TEST(Trace, RoundTrip) {
  const auto ts = small_trace();
  const auto text = write_trace_text(ts);
  EXPECT_EQ(parse_trace_text(text), ts);
  EXPECT_EQ(write_trace_text(parse_trace_text(text)), text);
}

TEST(Trace, StatusKeepsItsType) {
  const auto back = parse_trace_text(write_trace_text(small_trace()));
  EXPECT_EQ(std::get<std::int64_t>(back.request_spans[0].response_status), 200);
  EXPECT_EQ(std::get<std::string>(back.request_spans[1].response_status), "OK");
  EXPECT_EQ(status_text(back.request_spans[1].response_status), "OK");
}

TEST(Trace, BinaryBodiesAreBase64) {
  auto ts = small_trace();
  ts.request_spans[0].request_body = std::string("\xff\xfe\x00\x01", 4);
  const auto text = write_trace_text(ts);
  EXPECT_NE(text.find("req_body_encoding"), std::string::npos);
  EXPECT_EQ(parse_trace_text(text).request_spans[0].request_body, ts.request_spans[0].request_body);
}

TEST(Trace, MissingBodyIsNotEmptyBody) {
  auto ts = small_trace();
  ts.request_spans[1].request_body.reset();
  ts.request_spans[0].request_body = "";
  const auto back = parse_trace_text(write_trace_text(ts));
  EXPECT_FALSE(back.request_spans[1].request_body.has_value());
  EXPECT_EQ(back.request_spans[0].request_body, "");
  const auto diags = validate_trace(back);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].kind, DiagnosticKind::missing_body);
  EXPECT_EQ(diags[0].span_id, "r2");
}

TEST(Trace, HeaderIsOptional) {
  const auto text = write_trace_text(small_trace());
  const auto body = text.substr(text.find('\n') + 1);
  const auto ts = parse_trace_text(body);
  EXPECT_EQ(ts.request_spans.size(), 2u);
  EXPECT_TRUE(ts.source_meta.empty());
}

TEST(Trace, RejectsBadInput) {
  const auto text = write_trace_text(small_trace());
  EXPECT_THROW(parse_trace_text("{not json}\n"), MalformedRecord);
  EXPECT_THROW(parse_trace_text(R"({"kind":"request","span_id":"x"})" "\n"), MalformedRecord);
  EXPECT_THROW(parse_trace_text(R"({"kind":"blob"})" "\n"), MalformedRecord);
  EXPECT_THROW(parse_trace_text(R"({"kind":"header","format":"flowrace-trace","version":99})" "\n"), MalformedRecord);
  // header after a record
  const auto first = text.substr(0, text.find('\n') + 1);
  const auto rest = text.substr(first.size());
  EXPECT_THROW(parse_trace_text(rest + first), MalformedRecord);

  try {
    parse_trace_text(first + "\n[1,2]\n");
    FAIL();
  } catch (const MalformedRecord& e) {
    EXPECT_EQ(e.line_no, 3u);
  }
}

TEST(Trace, DuplicateAndDangling) {
  auto ts = small_trace();
  ts.data_spans[0].span_id = "r1";
  EXPECT_THROW(parse_trace_text(write_trace_text(ts)), DuplicateSpanId);
  ts = small_trace();
  ts.data_spans[0].parent_request = "nope";
  EXPECT_THROW(parse_trace_text(write_trace_text(ts)), DanglingDataSpan);
}

TEST(Trace, Diagnostics) {
  auto ts = small_trace();
  ts.request_spans[0].end_ts = 50;
  ts.request_spans[1].parent_span_id = "ghost";
  const auto diags = validate_trace(ts);
  ASSERT_EQ(diags.size(), 2u);
  std::set<DiagnosticKind> kinds;
  for (const auto& d : diags) kinds.insert(d.kind);
  EXPECT_TRUE(kinds.count(DiagnosticKind::timestamp_inversion));
  EXPECT_TRUE(kinds.count(DiagnosticKind::orphan_parent));
}

TEST(Trace, Lookups) {
  const auto ts = small_trace();
  ASSERT_NE(ts.find_request("r2"), nullptr);
  EXPECT_EQ(ts.find_request("d1"), nullptr);
  ASSERT_NE(ts.find_data("d1"), nullptr);
  EXPECT_EQ(ts.span_count(), 3u);
  EXPECT_EQ((FlowId{"f1", {0, 2}}.str()), "f1.0.2");
}

TEST(Codec, Base64) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
  EXPECT_EQ(base64_decode("Zm9vYg=="), "foob");
  EXPECT_FALSE(base64_decode("Zm9v!").has_value());
  const std::string bin("\x00\x01\xfe\xff", 4);
  EXPECT_EQ(base64_decode(base64_encode(bin)), bin);
}

TEST(Codec, Sha256) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Codec, Utf8) {
  EXPECT_TRUE(is_valid_utf8("plain"));
  EXPECT_TRUE(is_valid_utf8("caf\xc3\xa9"));
  EXPECT_FALSE(is_valid_utf8("\xc3"));
  EXPECT_FALSE(is_valid_utf8("\xed\xa0\x80"));  // surrogate
  EXPECT_FALSE(is_valid_utf8("\xc0\xaf"));      // overlong
}

TEST(Codec, Glob) {
  EXPECT_TRUE(glob_match("GET /orderOther/refresh/*", "GET /orderOther/refresh/4d2a46c7"));
  EXPECT_TRUE(glob_match("*", ""));
  EXPECT_TRUE(glob_match("a?c", "abc"));
  EXPECT_FALSE(glob_match("a?c", "ac"));
  EXPECT_TRUE(glob_match("order-mysql*", "order-mysql-replica:3306"));
  EXPECT_FALSE(glob_match("order-mysql", "order-mysql-replica:3306"));
  EXPECT_TRUE(glob_match("*a*b*", "xxaybz"));
}
