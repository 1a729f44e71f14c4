#pragma once

// Data-parallel inner loops of the analysis. Each kernel has an OpenMP
// version and a serial reference with identical output; tests compare the
// two and the benchmark times them.

#include <cstdint>
#include <span>
#include <vector>

namespace flowrace::kernels {

using BitRow = std::vector<std::uint64_t>;

inline bool test_bit(const BitRow& row, std::size_t i) { return (row[i / 64] >> (i % 64)) & 1U; }
inline void set_bit(BitRow& row, std::size_t i) { row[i / 64] |= std::uint64_t{1} << (i % 64); }

// reach[s] has bit t set iff t is reachable from s by a path of length >= 1.
std::vector<BitRow> transitive_closure(std::span<const std::vector<std::size_t>> successors);
std::vector<BitRow> transitive_closure_serial(std::span<const std::vector<std::size_t>> successors);

// Candidate index pairs (i < j) for which `conflicts(i, j)` holds, in
// ascending (i, j) order. Conflict predicate must be thread-safe.
template <typename Pred>
std::vector<std::pair<std::size_t, std::size_t>> conflicting_pairs(std::size_t n, Pred conflicts) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rows(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t si = 0; si < static_cast<std::int64_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    for (std::size_t j = i + 1; j < n; ++j)
      if (conflicts(i, j)) rows[i].emplace_back(i, j);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

template <typename Pred>
std::vector<std::pair<std::size_t, std::size_t>> conflicting_pairs_serial(std::size_t n, Pred conflicts) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (conflicts(i, j)) out.emplace_back(i, j);
  return out;
}

// out[i] = fn(i) for every i, evaluated in parallel.
template <typename T, typename Fn>
std::vector<T> map_indexed(std::size_t n, Fn fn) {
  std::vector<T> out(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
  return out;
}

template <typename T, typename Fn>
std::vector<T> map_indexed_serial(std::size_t n, Fn fn) {
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

}  // namespace flowrace::kernels
