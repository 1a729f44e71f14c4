#include "flowrace/oracle.hpp"

#include <algorithm>

#include "flowrace/codec.hpp"

namespace flowrace {

std::string to_string(InvariantKind k) {
  switch (k) {
    case InvariantKind::expect: return "expect";
    case InvariantKind::relation: return "relation";
    case InvariantKind::tolerate: return "tolerate";
  }
  return "expect";
}

namespace {

const std::set<std::string> kRelationOps = {"==", "!=", "<", "<=", ">", ">="};

bool whitelisted(const RequestSpec& r, const std::vector<std::string>& patterns) {
  const auto full = r.endpoint();
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::string& p) { return glob_match(p, full) || glob_match(p, r.target); });
}

bool relation_holds(const Json& lhs, const std::string& op, const Json& rhs) {
  if (lhs.is_number() && rhs.is_number()) {
    const double x = lhs.get<double>(), y = rhs.get<double>();
    if (op == "==") return x == y;
    if (op == "!=") return x != y;
    if (op == "<") return x < y;
    if (op == "<=") return x <= y;
    if (op == ">") return x > y;
    return x >= y;
  }
  if (op == "==") return lhs == rhs;
  if (op == "!=") return lhs != rhs;
  // Ordering between non-numbers is undefined; treat as satisfied.
  return true;
}

std::vector<std::string> sorted_lines(const std::vector<std::string>& lines, const Normalizer& norm) {
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(norm.text(l));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void OracleConfig::validate() const {
  std::set<std::string> names;
  for (const auto& inv : state_invariants) {
    if (inv.name.empty()) throw ConfigError("state invariant without a name");
    if (!names.insert(inv.name).second) throw ConfigError("duplicate state invariant '" + inv.name + "'");
    if (inv.path.empty()) throw ConfigError("state invariant '" + inv.name + "' has no path");
    if (inv.kind == InvariantKind::relation && !kRelationOps.count(inv.op))
      throw ConfigError("state invariant '" + inv.name + "' has unknown operator '" + inv.op + "'");
  }
  for (const auto& p : response_whitelist)
    if (p.empty()) throw ConfigError("empty response whitelist pattern");
  Normalizer check(normalization);  // throws on bad patterns
}

std::optional<std::vector<ServiceDelta>> service_level(const InterleaveResult& res, const OracleConfig& cfg) {
  const Normalizer norm(cfg.normalization);
  std::set<std::string> services;
  for (const auto& [s, _] : res.forward.logs) services.insert(s);
  for (const auto& [s, _] : res.reverse.logs) services.insert(s);

  std::vector<ServiceDelta> out;
  static const std::vector<std::string> none;
  for (const auto& s : services) {
    const auto fit = res.forward.logs.find(s);
    const auto rit = res.reverse.logs.find(s);
    const auto f = sorted_lines(fit == res.forward.logs.end() ? none : fit->second, norm);
    const auto r = sorted_lines(rit == res.reverse.logs.end() ? none : rit->second, norm);
    ServiceDelta d{s, {}, {}};
    std::set_difference(f.begin(), f.end(), r.begin(), r.end(), std::back_inserter(d.forward_only));
    std::set_difference(r.begin(), r.end(), f.begin(), f.end(), std::back_inserter(d.reverse_only));
    if (!d.forward_only.empty() || !d.reverse_only.empty()) out.push_back(std::move(d));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<std::vector<ResponseDelta>> response_level(const InterleaveResult& res, const OracleConfig& cfg) {
  const Normalizer norm(cfg.normalization);
  std::vector<ResponseDelta> out;
  for (int role = 0; role < 2; ++role) {
    const auto& spec = role == 0 ? res.request_a : res.request_b;
    if (whitelisted(spec, cfg.response_whitelist)) continue;
    if (res.forward.responses.size() < 2 || res.reverse.responses.size() < 2) continue;
    const auto& f = res.forward.responses[static_cast<std::size_t>(role)];
    const auto& r = res.reverse.responses[static_cast<std::size_t>(role)];

    ResponseDelta d;
    d.role = role;
    d.request = spec.origin;
    d.endpoint = spec.endpoint();
    d.forward_status = status_text(f.status);
    d.reverse_status = status_text(r.status);
    d.forward_body = f.body;
    d.reverse_body = r.body;
    bool differs = d.forward_status != d.reverse_status;

    const auto fj = Json::parse(f.body, nullptr, false);
    const auto rj = Json::parse(r.body, nullptr, false);
    if (!f.body.empty() && !r.body.empty() && !fj.is_discarded() && !rj.is_discarded()) {
      const auto fl = flatten(norm.apply(fj));
      const auto rl = flatten(norm.apply(rj));
      for (const auto& [path, v] : fl) {
        const auto it = rl.find(path);
        if (it == rl.end() || it->second != v) d.paths.push_back(path);
      }
      for (const auto& [path, _] : rl)
        if (!fl.count(path)) d.paths.push_back(path);
      std::sort(d.paths.begin(), d.paths.end());
      differs = differs || !d.paths.empty();
    } else {
      d.byte_compared = true;
      differs = differs || norm.text(f.body) != norm.text(r.body);
    }
    if (differs) out.push_back(std::move(d));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<std::vector<StateDelta>> state_level(const InterleaveResult& res, const OracleConfig& cfg,
                                                   std::vector<StateDelta>* tolerated) {
  const auto f = flatten(res.forward.final_state);
  const auto r = flatten(res.reverse.final_state);
  std::set<std::string> paths;
  for (const auto& [p, _] : f) paths.insert(p);
  for (const auto& [p, _] : r) paths.insert(p);

  const bool has_rules = std::any_of(cfg.state_invariants.begin(), cfg.state_invariants.end(),
                                     [](const StateInvariant& i) { return i.kind != InvariantKind::tolerate; });
  std::vector<StateDelta> evidence;
  for (const auto& p : paths) {
    const auto fit = f.find(p);
    const auto rit = r.find(p);
    const Json fv = fit == f.end() ? Json() : fit->second;
    const Json rv = rit == r.end() ? Json() : rit->second;
    if (fit != f.end() && rit != r.end() && fv == rv) continue;

    StateDelta delta{p, fv, rv, {}};
    const StateInvariant* counted = nullptr;
    const StateInvariant* tolerance = nullptr;
    for (const auto& inv : cfg.state_invariants) {
      if (!glob_match(inv.path, p)) continue;
      if (inv.kind == InvariantKind::expect) {
        counted = counted ? counted : &inv;
      } else if (inv.kind == InvariantKind::relation) {
        if (!relation_holds(fv, inv.op, inv.value) || !relation_holds(rv, inv.op, inv.value))
          counted = counted ? counted : &inv;
      } else {
        tolerance = tolerance ? tolerance : &inv;
      }
    }
    if (counted) {
      delta.rule = counted->name;
      evidence.push_back(std::move(delta));
    } else if (tolerance) {
      delta.rule = tolerance->name;
      if (tolerated) tolerated->push_back(std::move(delta));
    } else if (!has_rules) {
      evidence.push_back(std::move(delta));
    }
  }
  if (evidence.empty()) return std::nullopt;
  return evidence;
}

Verdict judge(const InterleaveResult& res, const OracleConfig& cfg) {
  Verdict v;
  v.pair = res.pair;
  v.service_diff = service_level(res, cfg);
  v.response_diff = response_level(res, cfg);
  v.state_diff = state_level(res, cfg, &v.tolerated);
  v.is_bug = v.service_diff || v.response_diff || v.state_diff;
  v.warning = !v.is_bug && !v.tolerated.empty();
  return v;
}

}  // namespace flowrace
