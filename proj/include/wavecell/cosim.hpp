#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wavecell/dataset.hpp"
#include "wavecell/errors.hpp"
#include "wavecell/idm.hpp"
#include "wavecell/simlog.hpp"
#include "wavecell/vehicle.hpp"

namespace wavecell {

struct SimConfig {
    double t_max = 30.0;        // episode length, s
    double dt = 0.01;           // step size, s
    double vel_default = 30.0;  // default desired speed, m/s
    Road road = Road::Westbound;
    double w_visible = 150.0;   // m
    double w_ghost = 50.0;      // m
    int ego_lane = -1;
    double ego_x = 0.0;         // requested initial position
    double ego_t = 0.0;         // requested initial timestamp
    std::uint64_t seed = 0;
    IdmParams model;
    bool phantom_leader = false;
    bool lane_changes = false;
    double min_spawn_gap = 2.0; // clearance beyond bumper-to-bumper for spawns, m
    RoadSpec roadspec = i24_segment();

    void validate() const {
        if (t_max < 0.0) throw ConfigError("sim.t_max must be >= 0");
        if (dt <= 0.0) throw ConfigError("sim.dt must be > 0");
        if (vel_default <= 0.0) throw ConfigError("sim.vel_default must be > 0");
        if (w_visible <= 0.0) throw ConfigError("sim.w_visible must be > 0");
        if (w_ghost <= 0.0) throw ConfigError("sim.w_ghost must be > 0");
        if (min_spawn_gap < 0.0) throw ConfigError("sim.min_spawn_gap must be >= 0");
        if (!roadspec.has_lane(ego_lane)) throw ConfigError("sim.ego_lane not on road");
        model.validate();
    }
};

enum class Region { Visible, GhostUpstream, GhostDownstream, Outside };

inline std::string_view to_string(Region r) {
    switch (r) {
        case Region::Visible: return "Visible";
        case Region::GhostUpstream: return "GhostUpstream";
        case Region::GhostDownstream: return "GhostDownstream";
        default: return "Outside";
    }
}

// Window classification relative to the ego position. The visible band is
// closed on both ends and wins the shared boundary points, so the ghost
// bands are half-open against it:
//   Visible:        ego_x - w_v <= x <= ego_x + w_v
//   GhostUpstream:  ego_x - w_v - w_g <= x <  ego_x - w_v
//   GhostDownstream ego_x + w_v <  x <= ego_x + w_v + w_g
inline Region classify_region(double ego_x, double x, const SimConfig& cfg) {
    const double wv = cfg.w_visible;
    const double wg = cfg.w_ghost;
    if (x >= ego_x - wv && x <= ego_x + wv) return Region::Visible;
    if (x >= ego_x - wv - wg && x < ego_x - wv) return Region::GhostUpstream;
    if (x > ego_x + wv && x <= ego_x + wv + wg) return Region::GhostDownstream;
    return Region::Outside;
}

// Live simulation state: the ego, the actively simulated visible set, the
// replayed ghost set, and ids awaiting a deferred spawn. Owned by the
// stepping loop; never shared across threads.
struct SimState {
    double t = 0.0;
    double t0 = 0.0;
    AgentState ego;
    std::map<std::string, AgentState, std::less<>> visible;
    GhostMap ghost;
    int step_index = 0;
    std::set<std::string, std::less<>> pending_spawns;
};

namespace detail {

inline std::vector<AgentState> collect_agents(const SimState& state) {
    std::vector<AgentState> agents;
    agents.reserve(state.visible.size() + 1);
    agents.push_back(state.ego);
    for (const auto& [id, a] : state.visible) agents.push_back(a);
    return agents;
}

inline void scatter_agents(SimState& state, std::vector<AgentState>&& agents) {
    state.ego = std::move(agents.front());
    for (std::size_t i = 1; i < agents.size(); ++i) {
        state.visible[agents[i].id] = std::move(agents[i]);
    }
}

// Clearance between a prospective body [x-length, x] and every same-lane
// agent body (ego included). Returns the smallest bumper-to-bumper distance.
inline double spawn_clearance(const SimState& state, int lane, double x, double length) {
    double clearance = std::numeric_limits<double>::infinity();
    const auto consider = [&](const AgentState& a) {
        if (a.lane != lane) return;
        const double d = a.x > x ? (a.x - a.length) - x : (x - length) - a.x;
        clearance = std::min(clearance, d);
    };
    consider(state.ego);
    for (const auto& [id, a] : state.visible) consider(a);
    return clearance;
}

}  // namespace detail

// Steps 1-2: pick the ego from the data, then populate the visible and ghost
// sets from every vehicle interpolable at the ego's record timestamp.
// Visible vehicles are materialized with their data velocity set directly.
inline SimState initialize(const Dataset& dataset, const SimConfig& cfg) {
    SimState state;
    const VehicleState ego_rec =
        dataset.find_closest(cfg.road, cfg.ego_lane, cfg.ego_x, cfg.ego_t);
    state.t = state.t0 = ego_rec.t;
    state.ego = materialize_agent(ego_rec, cfg.model, cfg.seed);
    state.ego.v0 = cfg.vel_default;

    for (const auto& traj : dataset.trajectories()) {
        if (traj.road != cfg.road || traj.id == ego_rec.id) continue;
        const auto s = Dataset::interpolate(traj, state.t);
        if (!s) continue;
        switch (classify_region(state.ego.x, s->x, cfg)) {
            case Region::Visible: {
                AgentState a = materialize_agent(*s, cfg.model, cfg.seed);
                a.v0 = cfg.vel_default;
                state.visible.emplace(traj.id, std::move(a));
                break;
            }
            case Region::GhostUpstream:
            case Region::GhostDownstream:
                state.ghost.emplace(traj.id, *s);
                break;
            case Region::Outside:
                break;
        }
    }
    return state;
}

// Step 3, re-run every step: the ego and everything behind it want the
// default speed; each lane's leading visible vehicle ahead of the ego couples
// to the nearest same-lane downstream ghost, falling back to the default.
inline void assign_desired_speeds(SimState& state, const SimConfig& cfg) {
    state.ego.v0 = cfg.vel_default;

    std::map<int, const AgentState*> lane_leaders;
    for (const auto& [id, a] : state.visible) {
        auto [it, inserted] = lane_leaders.try_emplace(a.lane, &a);
        if (!inserted && a.x > it->second->x) it->second = &a;
    }

    for (auto& [id, a] : state.visible) {
        a.v0 = cfg.vel_default;
        if (a.x <= state.ego.x) continue;
        const auto lead = lane_leaders.find(a.lane);
        if (lead == lane_leaders.end() || lead->second != &a) continue;
        // Lane leader: desired speed follows the ghost ahead.
        const VehicleState* nearest = nullptr;
        for (const auto& [gid, g] : state.ghost) {
            if (g.lane != a.lane) continue;
            if (classify_region(state.ego.x, g.x, cfg) != Region::GhostDownstream) continue;
            if (!nearest || g.x < nearest->x) nearest = &g;
        }
        if (nearest) a.v0 = nearest->vel;
    }
}

struct StepEvents {
    std::vector<std::string> deferred;
    std::vector<std::pair<std::string, double>> spawned;
};

// Steps 5-6. Visible agents that drifted out of the visible band become
// ghosts carrying their simulated state; ghosts that entered it spawn as
// agents with their replayed velocity, unless the spawn point sits within
// min_spawn_gap of a same-lane body, in which case the spawn is deferred
// and retried from the data on later steps.
inline StepEvents transition_vehicles(SimState& state, const Dataset& dataset,
                                      const SimConfig& cfg) {
    StepEvents events;

    for (auto it = state.visible.begin(); it != state.visible.end();) {
        if (classify_region(state.ego.x, it->second.x, cfg) != Region::Visible) {
            VehicleState g;
            g.id = it->second.id;
            g.road = cfg.road;
            g.t = state.t;
            g.x = it->second.x;
            g.y = it->second.y;
            g.lane = it->second.lane;
            g.vel = it->second.vel;
            state.ghost.insert_or_assign(it->first, std::move(g));
            it = state.visible.erase(it);
        } else {
            ++it;
        }
    }

    const auto try_spawn = [&](const VehicleState& v) {
        const double length = keyed_length(cfg.seed, v.id, cfg.model);
        if (detail::spawn_clearance(state, v.lane, v.x, length) < cfg.min_spawn_gap) return false;
        AgentState a = materialize_agent(v, cfg.model, cfg.seed);
        a.v0 = cfg.vel_default;
        events.spawned.emplace_back(a.id, a.vel);
        state.visible.emplace(v.id, std::move(a));
        return true;
    };

    // Retry spawns deferred on earlier steps from their replayed state.
    // Ids whose data no longer places them in the visible region fall back
    // to the reload, exactly like any other ghost.
    const std::vector<std::string> pending(state.pending_spawns.begin(),
                                           state.pending_spawns.end());
    for (const auto& id : pending) {
        if (state.visible.count(id)) {
            state.pending_spawns.erase(id);
            continue;
        }
        const auto s = dataset.interpolate(id, state.t);
        if (!s || s->road != cfg.road ||
            classify_region(state.ego.x, s->x, cfg) != Region::Visible) {
            state.pending_spawns.erase(id);
            continue;
        }
        if (try_spawn(*s)) {
            state.pending_spawns.erase(id);
        } else {
            events.deferred.push_back(id);
        }
    }

    for (auto it = state.ghost.begin(); it != state.ghost.end();) {
        if (classify_region(state.ego.x, it->second.x, cfg) == Region::Visible) {
            const VehicleState v = it->second;
            it = state.ghost.erase(it);
            if (!state.pending_spawns.count(v.id) && !try_spawn(v)) {
                events.deferred.push_back(v.id);
                state.pending_spawns.insert(v.id);
            }
        } else {
            ++it;
        }
    }
    return events;
}

// Step 7: replace the ghost set wholesale from the data over both ghost
// bands at the current timestamp, never duplicating the ego or a visible id.
inline void reload_ghosts(SimState& state, const Dataset& dataset, const SimConfig& cfg) {
    const double lo = state.ego.x - cfg.w_visible - cfg.w_ghost;
    const double hi = state.ego.x + cfg.w_visible + cfg.w_ghost;
    state.ghost.clear();
    for (auto& s : dataset.query_interval(cfg.road, state.t, lo, hi)) {
        const Region r = classify_region(state.ego.x, s.x, cfg);
        if (r != Region::GhostUpstream && r != Region::GhostDownstream) continue;
        if (s.id == state.ego.id || state.visible.count(s.id)) continue;
        state.ghost.insert_or_assign(s.id, std::move(s));
    }
}

namespace detail {

inline LogEntry make_entry(const SimState& state, StepEvents events) {
    LogEntry e;
    e.step = state.step_index;
    e.t = state.t;
    e.ego = state.ego;
    e.visible.reserve(state.visible.size());
    for (const auto& [id, a] : state.visible) e.visible.push_back(a);
    e.ghosts.reserve(state.ghost.size());
    for (const auto& [id, g] : state.ghost) e.ghosts.push_back(g);
    e.deferred_spawns = std::move(events.deferred);
    e.spawned = std::move(events.spawned);
    return e;
}

}  // namespace detail

// One full cosimulation step: desired-speed assignment, lane changes when
// enabled, the car-following update for ego + visible, the ballistic ghost
// advance, window transitions, then the wholesale ghost reload at the new
// timestamp.
inline LogEntry step(SimState& state, const Dataset& dataset, const SimConfig& cfg) {
    assign_desired_speeds(state, cfg);

    auto agents = detail::collect_agents(state);
    if (cfg.lane_changes) {
        apply_lane_changes(agents, cfg.roadspec, state.t - state.t0, state.ghost,
                           cfg.phantom_leader, cfg.model, cfg.seed);
    }
    advance_agents(agents, state.ghost, cfg.phantom_leader, cfg.dt, cfg.model, cfg.seed);
    detail::scatter_agents(state, std::move(agents));

    for (auto& [id, g] : state.ghost) {
        g.x += g.vel * cfg.dt;
        g.t = state.t + cfg.dt;
    }

    state.step_index += 1;
    state.t = state.t0 + static_cast<double>(state.step_index) * cfg.dt;

    StepEvents events = transition_vehicles(state, dataset, cfg);
    reload_ghosts(state, dataset, cfg);
    return detail::make_entry(state, std::move(events));
}

// Step 8 wrapped around the loop: run until the episode clock expires or the
// ego reaches the end of the instrumented segment.
inline SimLog run(const Dataset& dataset, const SimConfig& cfg) {
    cfg.validate();
    SimLog log;
    SimState state = initialize(dataset, cfg);
    log.entries.push_back(detail::make_entry(state, {}));
    while (true) {
        if (state.t - state.t0 >= cfg.t_max - 1e-12) {
            log.termination = "time";
            break;
        }
        if (state.ego.x >= cfg.roadspec.length) {
            log.termination = "road-end";
            break;
        }
        log.entries.push_back(step(state, dataset, cfg));
    }
    return log;
}

}  // namespace wavecell
