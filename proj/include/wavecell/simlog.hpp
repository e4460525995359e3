#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wavecell/idm.hpp"
#include "wavecell/vehicle.hpp"

namespace wavecell {

// Per-step snapshot. Vehicle vectors are sorted by id; entry 0 is the
// initial state, entries thereafter are one per executed step, dt apart.
struct LogEntry {
    int step = 0;
    double t = 0.0;
    AgentState ego;
    std::vector<AgentState> visible;
    std::vector<VehicleState> ghosts;
    std::vector<std::string> deferred_spawns;            // ids held back by the gap check
    std::vector<std::pair<std::string, double>> spawned; // (id, velocity at spawn)
};

struct SimLog {
    std::vector<LogEntry> entries;
    std::string termination;  // "time" | "road-end"
};

}  // namespace wavecell
