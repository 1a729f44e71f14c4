#include <algorithm>
#include <map>
#include <tuple>

#include "flowrace/flows.hpp"

namespace flowrace {

namespace {

struct Lane {
  std::vector<SpanId> spans;
  std::vector<bool> owned;
};

struct Join {
  std::size_t from_lane, to_lane;
  SpanId from_span, to_span;
};

class Splitter {
 public:
  Splitter(const TraceSet& ts, const RequestFlow& flow) {
    for (const auto& id : flow.ordered_spans) {
      const auto* r = ts.find_request(id);
      if (!r) throw UnknownSpan(id);
      spans_[id] = r;
    }
    for (const auto& id : flow.ordered_spans) {
      const auto* r = spans_[id];
      if (r->parent_span_id && spans_.count(*r->parent_span_id))
        children_[*r->parent_span_id].push_back(r);
      else
        roots_.push_back(r);
    }
    auto by_start = [](const RequestSpan* a, const RequestSpan* b) {
      return std::tie(a->start_ts, a->span_id) < std::tie(b->start_ts, b->span_id);
    };
    for (auto& [_, c] : children_) std::sort(c.begin(), c.end(), by_start);
    std::sort(roots_.begin(), roots_.end(), by_start);
  }

  std::vector<Lane> run() {
    lanes_.emplace_back();
    for (const auto* r : roots_) visit(r, 0);
    return std::move(lanes_);
  }

  const std::vector<Join>& joins() const { return joins_; }

 private:
  static std::string thread_of(const RequestSpan* r) {
    return r->thread_tag && *r->thread_tag != "main" ? *r->thread_tag : std::string("main");
  }

  void visit(const RequestSpan* node, std::size_t lane) {
    lanes_[lane].spans.push_back(node->span_id);
    lanes_[lane].owned.push_back(true);
    const auto it = children_.find(node->span_id);
    if (it == children_.end()) return;
    const auto& kids = it->second;

    // Groups in order of first appearance; kids are already sorted by start.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const RequestSpan*>> groups;
    for (const auto* k : kids) {
      const auto t = thread_of(k);
      if (!groups.count(t)) order.push_back(t);
      groups[t].push_back(k);
    }
    if (groups.size() == 1) {
      for (const auto* k : kids) visit(k, lane);
      return;
    }
    const std::string main = groups.count("main") ? std::string("main") : order.front();
    Lane prefix = lanes_[lane];
    std::fill(prefix.owned.begin(), prefix.owned.end(), false);

    for (const auto* k : groups[main]) visit(k, lane);
    for (const auto& t : order) {
      if (t == main) continue;
      const auto idx = lanes_.size();
      lanes_.push_back(prefix);
      for (const auto* k : groups[t]) visit(k, idx);
      // The main thread is taken to have joined the branch when its next
      // child starts after every span the branch issued has ended.
      const auto& branch = lanes_[idx];
      Timestamp branch_end = 0;
      SpanId last;
      for (std::size_t i = 0; i < branch.spans.size(); ++i) {
        if (!branch.owned[i]) continue;
        branch_end = std::max(branch_end, spans_.at(branch.spans[i])->end_ts);
        last = branch.spans[i];
      }
      for (const auto* k : groups[main]) {
        if (k->start_ts > branch_end) {
          joins_.push_back({idx, lane, last, k->span_id});
          break;
        }
      }
    }
  }

  std::map<SpanId, const RequestSpan*> spans_;
  std::map<SpanId, std::vector<const RequestSpan*>> children_;
  std::vector<const RequestSpan*> roots_;
  std::vector<Lane> lanes_;
  std::vector<Join> joins_;
};

}  // namespace

FlowGraph split_async(FlowGraph fg) {
  std::vector<RequestFlow> out;
  for (const auto& flow : fg.flows) {
    Splitter splitter(fg.trace, flow);
    auto lanes = splitter.run();
    if (lanes.size() == 1) {
      out.push_back(flow);
      continue;
    }
    for (std::size_t k = 0; k < lanes.size(); ++k) {
      RequestFlow f;
      f.flow_id = flow.flow_id;
      f.flow_id.branch.push_back(static_cast<int>(k));
      f.ordered_spans = std::move(lanes[k].spans);
      f.owned = std::move(lanes[k].owned);
      for (const auto& id : f.ordered_spans)
        if (auto it = flow.data_attachments.find(id); it != flow.data_attachments.end())
          f.data_attachments[id] = it->second;
      out.push_back(std::move(f));
    }
    for (const auto& j : splitter.joins()) {
      auto from = flow.flow_id, to = flow.flow_id;
      from.branch.push_back(static_cast<int>(j.from_lane));
      to.branch.push_back(static_cast<int>(j.to_lane));
      fg.sync_edges.push_back({SyncKind::join_happens_before, from, to, "join", j.from_span, j.to_span});
    }
  }
  fg.flows = std::move(out);
  return fg;
}

}  // namespace flowrace
