#pragma once

// Published per-system pruning counts and test outcomes for the fourteen
// evaluated systems, copied by hand.

#include <array>
#include <cstddef>

namespace flowrace::check {

struct TableRow {
  std::size_t random, instance, flow, early, autotest;
  std::size_t fp, tp, tp_early, tp_tested;
};

inline constexpr std::array<TableRow, 14> kTableRows = {{
    {78, 56, 5, 6, 11, 2, 11, 6, 5},
    {76, 61, 3, 5, 7, 0, 9, 5, 4},
    {68, 50, 3, 6, 9, 5, 9, 6, 3},
    {9, 7, 1, 1, 0, 0, 1, 1, 0},
    {99, 80, 3, 9, 7, 6, 10, 9, 1},
    {28, 12, 5, 5, 6, 0, 7, 5, 2},
    {28, 12, 3, 7, 6, 0, 9, 7, 2},
    {49, 41, 1, 3, 4, 3, 4, 3, 1},
    {36, 28, 4, 4, 0, 0, 4, 4, 0},
    {91, 72, 3, 8, 8, 3, 11, 8, 3},
    {98, 76, 3, 9, 10, 1, 15, 9, 6},
    {64, 53, 2, 4, 5, 0, 6, 4, 2},
    {75, 64, 2, 6, 3, 2, 7, 6, 1},
    {62, 51, 1, 6, 4, 2, 7, 6, 1},
}};

}  // namespace flowrace::check
