#include "flowrace/trace.hpp"

#include <json.hpp>

#include <set>
#include <sstream>

#include "flowrace/codec.hpp"

namespace flowrace {

using nlohmann::json;

std::string FlowId::str() const {
  std::string out = root;
  for (int b : branch) out += "." + std::to_string(b);
  return out;
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::http: return "http";
    case Protocol::rpc: return "rpc";
    case Protocol::mq_consume: return "mq-consume";
  }
  return "http";
}

std::string to_string(StoreKind k) {
  switch (k) {
    case StoreKind::sql: return "sql";
    case StoreKind::kv: return "kv";
    case StoreKind::mq: return "mq";
    case StoreKind::object: return "object";
  }
  return "sql";
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "http") return Protocol::http;
  if (s == "rpc") return Protocol::rpc;
  if (s == "mq-consume") return Protocol::mq_consume;
  throw std::invalid_argument("unknown protocol '" + s + "'");
}

StoreKind store_kind_from_string(const std::string& s) {
  if (s == "sql") return StoreKind::sql;
  if (s == "kv") return StoreKind::kv;
  if (s == "mq") return StoreKind::mq;
  if (s == "object") return StoreKind::object;
  throw std::invalid_argument("unknown store kind '" + s + "'");
}

std::string status_text(const ResponseStatus& s) {
  if (const auto* i = std::get_if<std::int64_t>(&s)) return std::to_string(*i);
  return std::get<std::string>(s);
}

std::string to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::timestamp_inversion: return "TimestampInversion";
    case DiagnosticKind::orphan_parent: return "OrphanParent";
    case DiagnosticKind::missing_body: return "MissingBody";
  }
  return "Unknown";
}

const RequestSpan* TraceSet::find_request(const SpanId& id) const {
  for (const auto& r : request_spans)
    if (r.span_id == id) return &r;
  return nullptr;
}

const DataSpan* TraceSet::find_data(const SpanId& id) const {
  for (const auto& d : data_spans)
    if (d.span_id == id) return &d;
  return nullptr;
}

MalformedRecord::MalformedRecord(std::size_t line, const std::string& why)
    : TraceError("malformed record at line " + std::to_string(line) + ": " + why),
      line_no(line),
      reason(why) {}

DanglingDataSpan::DanglingDataSpan(const SpanId& id)
    : TraceError("data span '" + id + "' references a missing request span"), span_id(id) {}

DuplicateSpanId::DuplicateSpanId(const SpanId& id)
    : TraceError("duplicate span id '" + id + "'"), span_id(id) {}

namespace {

struct RecordReader {
  const json& obj;
  std::size_t line;

  const json& required(const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
      throw MalformedRecord(line, std::string("missing field '") + key + "'");
    return *it;
  }

  std::string str(const char* key) const {
    const auto& v = required(key);
    if (!v.is_string()) throw MalformedRecord(line, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::string nonempty(const char* key) const {
    auto s = str(key);
    if (s.empty()) throw MalformedRecord(line, std::string("field '") + key + "' is empty");
    return s;
  }

  std::optional<std::string> opt_str(const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw MalformedRecord(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
  }

  Timestamp ts(const char* key) const {
    const auto& v = required(key);
    if (!v.is_number_integer()) throw MalformedRecord(line, std::string("field '") + key + "' must be an integer");
    return v.get<Timestamp>();
  }

  std::optional<std::string> body(const char* key, const char* encoding_key) const {
    auto raw = opt_str(key);
    if (!raw) return std::nullopt;
    auto enc = opt_str(encoding_key);
    if (!enc) return raw;
    if (*enc != "base64") throw MalformedRecord(line, "unsupported body encoding '" + *enc + "'");
    auto decoded = base64_decode(*raw);
    if (!decoded) throw MalformedRecord(line, std::string("invalid base64 in '") + key + "'");
    return decoded;
  }
};

RequestSpan read_request(const RecordReader& r) {
  RequestSpan s;
  s.span_id = r.nonempty("span_id");
  s.flow_id.root = r.nonempty("flow_root");
  if (auto it = r.obj.find("flow_branch"); it != r.obj.end() && !it->is_null()) {
    if (!it->is_array()) throw MalformedRecord(r.line, "flow_branch must be an array");
    for (const auto& b : *it) {
      if (!b.is_number_integer() || b.get<int>() < 0)
        throw MalformedRecord(r.line, "flow_branch entries must be non-negative integers");
      s.flow_id.branch.push_back(b.get<int>());
    }
  }
  s.parent_span_id = r.opt_str("parent_span_id");
  s.service = r.str("service");
  try {
    s.protocol = protocol_from_string(r.str("protocol"));
  } catch (const std::invalid_argument& e) {
    throw MalformedRecord(r.line, e.what());
  }
  s.method = r.str("method");
  s.target = r.str("target");
  if (auto it = r.obj.find("req_headers"); it != r.obj.end() && !it->is_null()) {
    if (!it->is_object()) throw MalformedRecord(r.line, "req_headers must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw MalformedRecord(r.line, "header values must be strings");
      s.request_headers[k] = v.get<std::string>();
    }
  }
  s.request_body = r.body("req_body", "req_body_encoding");
  const auto& status = r.required("resp_status");
  if (status.is_number_integer()) {
    s.response_status = status.get<std::int64_t>();
  } else if (status.is_string()) {
    s.response_status = status.get<std::string>();
  } else {
    throw MalformedRecord(r.line, "resp_status must be an integer or string");
  }
  s.response_body = r.body("resp_body", "resp_body_encoding");
  s.start_ts = r.ts("start_ts");
  s.end_ts = r.ts("end_ts");
  s.thread_tag = r.opt_str("thread_tag");
  if (auto it = r.obj.find("logs"); it != r.obj.end() && !it->is_null()) {
    if (!it->is_array()) throw MalformedRecord(r.line, "logs must be an array");
    for (const auto& l : *it) {
      if (!l.is_string()) throw MalformedRecord(r.line, "log lines must be strings");
      s.log_lines.push_back(l.get<std::string>());
    }
  }
  return s;
}

DataSpan read_data(const RecordReader& r) {
  DataSpan d;
  d.span_id = r.nonempty("span_id");
  d.parent_request = r.nonempty("parent_request");
  try {
    d.store_kind = store_kind_from_string(r.str("store_kind"));
  } catch (const std::invalid_argument& e) {
    throw MalformedRecord(r.line, e.what());
  }
  d.instance.endpoint = r.nonempty("endpoint");
  d.instance.store_name = r.opt_str("store_name").value_or("");
  d.operation_text = r.nonempty("op_text");
  d.lock_id = r.opt_str("lock_id");
  d.start_ts = r.ts("start_ts");
  d.end_ts = r.ts("end_ts");
  return d;
}

void put_body(json& rec, const char* key, const char* encoding_key, const std::optional<std::string>& body) {
  if (!body) return;
  if (is_valid_utf8(*body)) {
    rec[key] = *body;
  } else {
    rec[key] = base64_encode(*body);
    rec[encoding_key] = "base64";
  }
}

json request_record(const RequestSpan& s) {
  json rec;
  rec["kind"] = "request";
  rec["span_id"] = s.span_id;
  rec["flow_root"] = s.flow_id.root;
  rec["flow_branch"] = s.flow_id.branch;
  if (s.parent_span_id) rec["parent_span_id"] = *s.parent_span_id;
  rec["service"] = s.service;
  rec["protocol"] = to_string(s.protocol);
  rec["method"] = s.method;
  rec["target"] = s.target;
  rec["req_headers"] = s.request_headers;
  put_body(rec, "req_body", "req_body_encoding", s.request_body);
  if (const auto* i = std::get_if<std::int64_t>(&s.response_status)) {
    rec["resp_status"] = *i;
  } else {
    rec["resp_status"] = std::get<std::string>(s.response_status);
  }
  put_body(rec, "resp_body", "resp_body_encoding", s.response_body);
  rec["start_ts"] = s.start_ts;
  rec["end_ts"] = s.end_ts;
  if (s.thread_tag) rec["thread_tag"] = *s.thread_tag;
  rec["logs"] = s.log_lines;
  return rec;
}

json data_record(const DataSpan& d) {
  json rec;
  rec["kind"] = "data";
  rec["span_id"] = d.span_id;
  rec["parent_request"] = d.parent_request;
  rec["store_kind"] = to_string(d.store_kind);
  rec["endpoint"] = d.instance.endpoint;
  rec["store_name"] = d.instance.store_name;
  rec["op_text"] = d.operation_text;
  if (d.lock_id) rec["lock_id"] = *d.lock_id;
  rec["start_ts"] = d.start_ts;
  rec["end_ts"] = d.end_ts;
  return rec;
}

}  // namespace

TraceSet parse_trace_file(std::istream& in) {
  TraceSet ts;
  std::string line;
  std::size_t line_no = 0;
  bool seen_record = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedRecord(line_no, e.what());
    }
    if (!obj.is_object()) throw MalformedRecord(line_no, "record is not a JSON object");
    RecordReader reader{obj, line_no};
    const auto kind = reader.str("kind");
    if (kind == "header") {
      if (seen_record) throw MalformedRecord(line_no, "header record must be the first record");
      if (reader.str("format") != kTraceFormatName)
        throw MalformedRecord(line_no, "unknown trace format");
      const auto& ver = reader.required("version");
      if (!ver.is_number_integer() || ver.get<int>() != kTraceFormatVersion)
        throw MalformedRecord(line_no, "unsupported trace format version");
      if (auto it = obj.find("meta"); it != obj.end() && it->is_object()) {
        for (const auto& [k, v] : it->items())
          ts.source_meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    } else if (kind == "request") {
      ts.request_spans.push_back(read_request(reader));
    } else if (kind == "data") {
      ts.data_spans.push_back(read_data(reader));
    } else {
      throw MalformedRecord(line_no, "unknown record kind '" + kind + "'");
    }
    seen_record = true;
  }

  // Referential checks run after all lines are read, so line order is irrelevant.
  std::set<SpanId> ids;
  std::set<SpanId> request_ids;
  for (const auto& r : ts.request_spans) {
    if (!ids.insert(r.span_id).second) throw DuplicateSpanId(r.span_id);
    request_ids.insert(r.span_id);
  }
  for (const auto& d : ts.data_spans)
    if (!ids.insert(d.span_id).second) throw DuplicateSpanId(d.span_id);
  for (const auto& d : ts.data_spans)
    if (!request_ids.count(d.parent_request)) throw DanglingDataSpan(d.span_id);
  return ts;
}

TraceSet parse_trace_text(const std::string& text) {
  std::istringstream in(text);
  return parse_trace_file(in);
}

void write_trace_file(const TraceSet& ts, std::ostream& out) {
  json header;
  header["kind"] = "header";
  header["format"] = kTraceFormatName;
  header["version"] = kTraceFormatVersion;
  header["meta"] = ts.source_meta;
  out << header.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  for (const auto& r : ts.request_spans)
    out << request_record(r).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  for (const auto& d : ts.data_spans)
    out << data_record(d).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
}

std::string write_trace_text(const TraceSet& ts) {
  std::ostringstream out;
  write_trace_file(ts, out);
  return out.str();
}

std::vector<Diagnostic> validate_trace(const TraceSet& ts) {
  std::vector<Diagnostic> out;
  std::set<SpanId> request_ids;
  for (const auto& r : ts.request_spans) request_ids.insert(r.span_id);
  for (const auto& r : ts.request_spans) {
    if (r.start_ts > r.end_ts)
      out.push_back({DiagnosticKind::timestamp_inversion, r.span_id,
                     "start_ts " + std::to_string(r.start_ts) + " > end_ts " + std::to_string(r.end_ts)});
    if (r.parent_span_id && !request_ids.count(*r.parent_span_id))
      out.push_back({DiagnosticKind::orphan_parent, r.span_id, "parent '" + *r.parent_span_id + "' not found"});
    if (!r.request_body) out.push_back({DiagnosticKind::missing_body, r.span_id, "request body absent"});
    if (!r.response_body) out.push_back({DiagnosticKind::missing_body, r.span_id, "response body absent"});
  }
  for (const auto& d : ts.data_spans) {
    if (d.start_ts > d.end_ts)
      out.push_back({DiagnosticKind::timestamp_inversion, d.span_id,
                     "start_ts " + std::to_string(d.start_ts) + " > end_ts " + std::to_string(d.end_ts)});
    if (!request_ids.count(d.parent_request))
      out.push_back({DiagnosticKind::orphan_parent, d.span_id, "parent request '" + d.parent_request + "' not found"});
  }
  return out;
}

}  // namespace flowrace
