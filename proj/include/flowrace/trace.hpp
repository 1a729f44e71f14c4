#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace flowrace {

using SpanId = std::string;
using Timestamp = std::int64_t;  // nanoseconds since epoch

struct FlowId {
  std::string root;
  std::vector<int> branch;

  auto operator<=>(const FlowId&) const = default;
  bool operator==(const FlowId&) const = default;

  std::string str() const;
};

enum class Protocol { http, rpc, mq_consume };
enum class StoreKind { sql, kv, mq, object };

std::string to_string(Protocol p);
std::string to_string(StoreKind k);
Protocol protocol_from_string(const std::string& s);
StoreKind store_kind_from_string(const std::string& s);

struct StoreInstance {
  std::string endpoint;
  std::string store_name;

  auto operator<=>(const StoreInstance&) const = default;
  bool operator==(const StoreInstance&) const = default;

  std::string str() const { return endpoint + "/" + store_name; }
};

// Status is kept as recorded: HTTP-style integers or protocol status strings.
using ResponseStatus = std::variant<std::int64_t, std::string>;

std::string status_text(const ResponseStatus& s);

struct RequestSpan {
  SpanId span_id;
  FlowId flow_id;
  std::optional<SpanId> parent_span_id;
  std::string service;
  Protocol protocol = Protocol::http;
  std::string method;
  std::string target;
  std::map<std::string, std::string> request_headers;
  // Absent bodies are representable so validate_trace can report them;
  // replay refuses spans without both bodies.
  std::optional<std::string> request_body;
  ResponseStatus response_status = std::int64_t{0};
  std::optional<std::string> response_body;
  Timestamp start_ts = 0;
  Timestamp end_ts = 0;
  std::optional<std::string> thread_tag;
  std::vector<std::string> log_lines;

  bool operator==(const RequestSpan&) const = default;

  std::string endpoint() const { return method + " " + target; }
};

struct DataSpan {
  SpanId span_id;
  SpanId parent_request;
  StoreKind store_kind = StoreKind::sql;
  StoreInstance instance;
  std::string operation_text;
  std::optional<std::string> lock_id;
  Timestamp start_ts = 0;
  Timestamp end_ts = 0;

  bool operator==(const DataSpan&) const = default;
};

struct TraceSet {
  std::vector<RequestSpan> request_spans;
  std::vector<DataSpan> data_spans;
  std::map<std::string, std::string> source_meta;

  bool operator==(const TraceSet&) const = default;

  const RequestSpan* find_request(const SpanId& id) const;
  const DataSpan* find_data(const SpanId& id) const;
  std::size_t span_count() const { return request_spans.size() + data_spans.size(); }
};

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRecord : public TraceError {
 public:
  MalformedRecord(std::size_t line_no, const std::string& reason);
  std::size_t line_no;
  std::string reason;
};

class DanglingDataSpan : public TraceError {
 public:
  explicit DanglingDataSpan(const SpanId& id);
  SpanId span_id;
};

class DuplicateSpanId : public TraceError {
 public:
  explicit DuplicateSpanId(const SpanId& id);
  SpanId span_id;
};

inline constexpr int kTraceFormatVersion = 1;
inline constexpr const char* kTraceFormatName = "flowrace-trace";

// Reads newline-delimited JSON span records. A header record is optional;
// when present it must come first and carry a supported version.
TraceSet parse_trace_file(std::istream& in);
TraceSet parse_trace_text(const std::string& text);

// Writes the header record followed by request spans then data spans, in
// list order. Bodies that are not valid UTF-8 are base64-encoded and flagged.
void write_trace_file(const TraceSet& ts, std::ostream& out);
std::string write_trace_text(const TraceSet& ts);

enum class DiagnosticKind { timestamp_inversion, orphan_parent, missing_body };

std::string to_string(DiagnosticKind k);

struct Diagnostic {
  DiagnosticKind kind;
  SpanId span_id;
  std::string detail;

  bool operator==(const Diagnostic&) const = default;
};

std::vector<Diagnostic> validate_trace(const TraceSet& ts);

}  // namespace flowrace
