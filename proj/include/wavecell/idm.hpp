#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wavecell/errors.hpp"
#include "wavecell/util.hpp"
#include "wavecell/vehicle.hpp"

namespace wavecell {

inline constexpr double kInfiniteGap = std::numeric_limits<double>::infinity();

struct IdmParams {
    double a_max = 1.5;        // max acceleration, m/s^2
    double b = 2.0;            // comfortable deceleration, m/s^2
    double s0 = 2.0;           // jam gap, m
    double T = 1.5;            // desired time headway, s
    double delta = 4.0;        // acceleration exponent
    double v0_default = 30.0;  // fallback desired speed, m/s
    double length_min = 4.2;   // vehicle length range, m
    double length_max = 5.5;

    void validate() const {
        if (a_max <= 0.0) throw ConfigError("model.a_max must be > 0");
        if (b <= 0.0) throw ConfigError("model.b must be > 0");
        if (s0 <= 0.0) throw ConfigError("model.s0 must be > 0");
        if (T <= 0.0) throw ConfigError("model.T must be > 0");
        if (delta <= 0.0) throw ConfigError("model.delta must be > 0");
        if (v0_default <= 0.0) throw ConfigError("model.v0_default must be > 0");
        if (length_min <= 0.0 || length_max < length_min)
            throw ConfigError("model.vehicle_length_range invalid");
    }
};

// An actively simulated vehicle. x is the front-bumper position; the body
// occupies [x - length, x].
struct AgentState {
    std::string id;
    int lane = -1;
    double x = 0.0;
    double y = 0.0;
    double vel = 0.0;
    double v0 = 0.0;          // current desired speed
    double length = 4.8;
    double last_accel = 0.0;  // effective acceleration applied last step
    double next_lane_check = 0.0;
};

// IDM acceleration: a_max * [1 - (vel/v0)^delta - (s*/gap)^2] with
// s* = max(s0, s0 + vel*T + vel*dv/(2*sqrt(a_max*b))). dv is the closing
// speed (own vel minus leader vel). An infinite gap drops the interaction
// term. A non-positive finite gap means the caller let two bodies overlap.
inline double idm_acceleration(double vel, double v0, double gap, double dv, const IdmParams& p) {
    double free_ratio;
    if (v0 > 0.0) {
        free_ratio = std::pow(vel / v0, p.delta);
    } else {
        // Desired speed zero: stay stopped, brake hard otherwise.
        free_ratio = vel > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    double interaction = 0.0;
    if (std::isfinite(gap)) {
        if (gap <= 0.0)
            throw OverlapError("idm_acceleration: non-positive gap " + fmt_double(gap));
        const double s_star =
            std::max(p.s0, p.s0 + vel * p.T + vel * dv / (2.0 * std::sqrt(p.a_max * p.b)));
        interaction = (s_star / gap) * (s_star / gap);
    }
    return p.a_max * (1.0 - free_ratio - interaction);
}

// Bumper-to-bumper gap at which idm_acceleration(vel, v0, gap, 0) == 0.
// Requires vel < v0.
inline double equilibrium_gap(double vel, double v0, const IdmParams& p) {
    const double s_star = p.s0 + vel * p.T;
    return s_star / std::sqrt(1.0 - std::pow(vel / v0, p.delta));
}

inline double keyed_length(std::uint64_t seed, std::string_view id, const IdmParams& p) {
    return p.length_min + keyed_uniform(seed, id) * (p.length_max - p.length_min);
}

struct Leader {
    double x = 0.0;       // front bumper
    double length = 0.0;
    double vel = 0.0;
    bool phantom = false; // sourced from a replayed ghost, not an agent
};

using GhostMap = std::map<std::string, VehicleState, std::less<>>;

// Nearest same-lane agent strictly ahead of `subject`. With phantom_leader
// set and no agent ahead, the nearest same-lane downstream ghost stands in;
// its length is drawn from the same keyed stream a spawn would use.
inline std::optional<Leader> find_leader(const std::vector<AgentState>& agents,
                                         const AgentState& subject, const GhostMap& ghosts,
                                         bool phantom_leader, const IdmParams& params,
                                         std::uint64_t seed) {
    const AgentState* best = nullptr;
    for (const auto& a : agents) {
        if (&a == &subject || a.id == subject.id) continue;
        if (a.lane != subject.lane || a.x <= subject.x) continue;
        if (!best || a.x < best->x || (a.x == best->x && a.id < best->id)) best = &a;
    }
    if (best) return Leader{best->x, best->length, best->vel, false};
    if (phantom_leader) {
        const VehicleState* gbest = nullptr;
        for (const auto& [id, g] : ghosts) {
            if (g.lane != subject.lane || g.x <= subject.x) continue;
            if (!gbest || g.x < gbest->x) gbest = &g;
        }
        if (gbest)
            return Leader{gbest->x, keyed_length(seed, gbest->id, params), gbest->vel, true};
    }
    return std::nullopt;
}

// One semi-implicit Euler step for every agent: accelerations are computed
// from the pre-step snapshot, then vel' = max(0, vel + a*dt), x' = x + vel'*dt.
// last_accel records the effective (vel' - vel)/dt.
inline void advance_agents(std::vector<AgentState>& agents, const GhostMap& ghosts,
                           bool phantom_leader, double dt, const IdmParams& params,
                           std::uint64_t seed) {
    std::vector<double> accel(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const AgentState& a = agents[i];
        const auto leader = find_leader(agents, a, ghosts, phantom_leader, params, seed);
        double gap = kInfiniteGap;
        double dv = 0.0;
        if (leader) {
            gap = leader->x - leader->length - a.x;
            dv = a.vel - leader->vel;
            if (gap <= 0.0)
                throw OverlapError("agents '" + a.id + "' and its leader overlap (gap " +
                                   fmt_double(gap) + ")");
        }
        accel[i] = idm_acceleration(a.vel, a.v0, gap, dv, params);
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
        AgentState& a = agents[i];
        const double new_vel = std::max(0.0, a.vel + accel[i] * dt);
        a.last_accel = (new_vel - a.vel) / dt;
        a.vel = new_vel;
        a.x += new_vel * dt;
    }
}

// Spawn an agent from a replayed state: velocity is set directly from the
// data (no impulse), length comes from the keyed stream, desired speed is
// the fallback until the next assignment pass.
inline AgentState materialize_agent(const VehicleState& ghost, const IdmParams& params,
                                    std::uint64_t seed) {
    AgentState a;
    a.id = ghost.id;
    a.lane = ghost.lane;
    a.x = ghost.x;
    a.y = ghost.y;
    a.vel = ghost.vel;
    a.v0 = params.v0_default;
    a.length = keyed_length(seed, ghost.id, params);
    return a;
}

// --- lane changing -----------------------------------------------------------
//
// Minimal incentive + safety rule: move to an adjacent lane when the IDM
// acceleration gain exceeds `min_gain` and both new-lane bumper gaps exceed
// s0. Each agent is evaluated at most once per `interval` seconds, in id
// order so later evaluations see earlier moves.

struct LaneChangeRule {
    double min_gain = 0.2;  // m/s^2
    double interval = 1.0;  // s
};

namespace detail {

inline double accel_in_lane(const std::vector<AgentState>& agents, const AgentState& subject,
                            int lane, const GhostMap& ghosts, bool phantom_leader,
                            const IdmParams& params, std::uint64_t seed, bool check_safety,
                            bool& safe) {
    AgentState probe = subject;
    probe.lane = lane;
    safe = true;
    if (check_safety) {
        const AgentState* follower = nullptr;
        for (const auto& a : agents) {
            if (a.id == subject.id || a.lane != lane) continue;
            if (a.x <= probe.x && (!follower || a.x > follower->x)) follower = &a;
        }
        if (follower && probe.x - probe.length - follower->x <= params.s0) safe = false;
    }
    const auto leader = find_leader(agents, probe, ghosts, phantom_leader, params, seed);
    double gap = kInfiniteGap;
    double dv = 0.0;
    if (leader) {
        gap = leader->x - leader->length - probe.x;
        dv = probe.vel - leader->vel;
        if (check_safety && gap <= params.s0) safe = false;
    }
    if (!safe) return -std::numeric_limits<double>::infinity();
    if (std::isfinite(gap) && gap <= 0.0) return -std::numeric_limits<double>::infinity();
    return idm_acceleration(probe.vel, probe.v0, gap, dv, params);
}

}  // namespace detail

inline void apply_lane_changes(std::vector<AgentState>& agents, const RoadSpec& road, double now,
                               const GhostMap& ghosts, bool phantom_leader,
                               const IdmParams& params, std::uint64_t seed,
                               const LaneChangeRule& rule = {}) {
    std::vector<std::size_t> order(agents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return agents[a].id < agents[b].id; });
    for (std::size_t idx : order) {
        AgentState& a = agents[idx];
        if (now < a.next_lane_check) continue;
        a.next_lane_check = now + rule.interval;
        bool safe_here = true;
        const double a_cur = detail::accel_in_lane(agents, a, a.lane, ghosts, phantom_leader,
                                                   params, seed, /*check_safety=*/false, safe_here);
        int best_lane = a.lane;
        double best_gain = rule.min_gain;
        for (int target : {a.lane + 1, a.lane - 1}) {
            if (!road.has_lane(target)) continue;
            bool safe = true;
            const double a_new = detail::accel_in_lane(agents, a, target, ghosts, phantom_leader,
                                                       params, seed, /*check_safety=*/true, safe);
            if (!safe) continue;
            const double gain = a_new - a_cur;
            if (gain > best_gain) {
                best_gain = gain;
                best_lane = target;
            }
        }
        if (best_lane != a.lane) {
            a.lane = best_lane;
            a.y = road.lane_center_y(best_lane);
        }
    }
}

}  // namespace wavecell
