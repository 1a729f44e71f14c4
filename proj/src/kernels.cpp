#include "flowrace/kernels.hpp"

namespace flowrace::kernels {

namespace {

BitRow reach_from(std::span<const std::vector<std::size_t>> successors, std::size_t source) {
  const std::size_t n = successors.size();
  BitRow row((n + 63) / 64, 0);
  std::vector<std::size_t> stack(successors[source].begin(), successors[source].end());
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (test_bit(row, v)) continue;
    set_bit(row, v);
    for (auto w : successors[v])
      if (!test_bit(row, w)) stack.push_back(w);
  }
  return row;
}

}  // namespace

std::vector<BitRow> transitive_closure(std::span<const std::vector<std::size_t>> successors) {
  const std::size_t n = successors.size();
  std::vector<BitRow> reach(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(n); ++s)
    reach[static_cast<std::size_t>(s)] = reach_from(successors, static_cast<std::size_t>(s));
  return reach;
}

std::vector<BitRow> transitive_closure_serial(std::span<const std::vector<std::size_t>> successors) {
  std::vector<BitRow> reach;
  reach.reserve(successors.size());
  for (std::size_t s = 0; s < successors.size(); ++s) reach.push_back(reach_from(successors, s));
  return reach;
}

}  // namespace flowrace::kernels
