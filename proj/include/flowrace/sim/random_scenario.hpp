#pragma once

#include <cstdint>

#include "flowrace/sim/scenario.hpp"

namespace flowrace::sim {

// Small scenario built from a seed: SQL tables behind a primary, a replica
// and an unrelated instance, plus calls, forks, message consumers and
// locks. At most max_requests request spans per run.
Json random_scenario_json(std::uint64_t seed, int max_requests = 8);
Scenario random_scenario(std::uint64_t seed, int max_requests = 8);

}  // namespace flowrace::sim
