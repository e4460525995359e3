#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wavecell/dataset.hpp"
#include "wavecell/errors.hpp"
#include "wavecell/idm.hpp"
#include "wavecell/vehicle.hpp"

namespace wavecell {

// Speed clamp applied to one vehicle to trigger a wave: during the window its
// speed is ramped down to (and held at) target_speed.
struct Perturbation {
    std::string vehicle_id;
    double start = 0.0;        // s
    double duration = 0.0;     // s
    double target_speed = 0.0; // m/s
};

// Per-lane platoons simulated under the car-following model and sampled into
// the dataset schema. Lanes are independent: no lane changes, so per-lane
// oracles stay exact. The platoon leader of each lane paces at initial_speed
// (its desired speed); followers want model.v0_default and sit at
// initial_spacing, the bumper-to-bumper gap.
struct SynthConfig {
    int n_vehicles = 1;          // per lane
    RoadSpec roadspec = i24_segment();
    Road road = Road::Westbound;
    std::vector<int> lanes_used = {-1};
    double x_start = 0.0;        // leader front-bumper position at t = 0
    double initial_spacing = 20.0;  // bumper-to-bumper gap, m
    double initial_speed = 25.0;    // m/s
    IdmParams model;
    std::optional<Perturbation> perturbation;
    double sample_rate = 10.0;   // Hz
    double duration = 60.0;      // s
    std::uint64_t seed = 0;

    void validate() const {
        if (n_vehicles < 1) throw ConfigError("synth.n_vehicles must be >= 1");
        if (initial_spacing <= 0.0) throw ConfigError("synth.initial_spacing must be > 0");
        if (initial_speed < 0.0) throw ConfigError("synth.initial_speed must be >= 0");
        if (sample_rate <= 0.0) throw ConfigError("synth.sample_rate must be > 0");
        if (duration <= 0.0) throw ConfigError("synth.duration must be > 0");
        if (lanes_used.empty()) throw ConfigError("synth.lanes_used must not be empty");
        for (int lane : lanes_used)
            if (!roadspec.has_lane(lane))
                throw ConfigError("synth.lanes_used: lane " + std::to_string(lane) + " not on road");
        model.validate();
    }
};

inline constexpr double kSynthDt = 0.01;       // internal integration step, s
inline constexpr double kPerturbRamp = 3.0;    // clamp deceleration, m/s^2

inline std::string synth_vehicle_id(int lane, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "l%dv%03d", lane, index);
    return buf;
}

// Deterministic for a given config: the only randomness is the per-id length
// draw, keyed by (seed, id). Records are emitted at sample_rate for every
// vehicle currently inside [0, road length].
inline Dataset generate(const SynthConfig& cfg) {
    cfg.validate();

    const int steps_per_sample = static_cast<int>(std::lround(1.0 / (cfg.sample_rate * kSynthDt)));
    if (steps_per_sample < 1 ||
        std::abs(steps_per_sample * cfg.sample_rate * kSynthDt - 1.0) > 1e-9)
        throw ConfigError("synth.sample_rate must divide the internal 100 Hz stepping rate");

    struct Lane {
        int lane = -1;
        std::vector<AgentState> agents;
    };
    std::vector<Lane> lanes;
    for (int lane_id : cfg.lanes_used) {
        Lane lane;
        lane.lane = lane_id;
        double front = cfg.x_start;
        for (int i = 0; i < cfg.n_vehicles; ++i) {
            AgentState a;
            a.id = synth_vehicle_id(lane_id, i);
            a.lane = lane_id;
            a.y = cfg.roadspec.lane_center_y(lane_id);
            a.length = keyed_length(cfg.seed, a.id, cfg.model);
            a.vel = cfg.initial_speed;
            a.v0 = i == 0 ? cfg.initial_speed : cfg.model.v0_default;
            if (i > 0) front -= lane.agents.back().length + cfg.initial_spacing;
            a.x = front;
            lane.agents.push_back(std::move(a));
        }
        lanes.push_back(std::move(lane));
    }

    std::vector<VehicleRecord> records;
    const GhostMap no_ghosts;
    const int total_steps = static_cast<int>(std::lround(cfg.duration / kSynthDt));

    const auto emit = [&](double t) {
        for (const auto& lane : lanes) {
            for (const auto& a : lane.agents) {
                if (a.x < 0.0 || a.x > cfg.roadspec.length) continue;
                VehicleRecord r;
                r.id = a.id;
                r.road = cfg.road;
                r.t = t;
                r.x = a.x;
                r.y = a.y;
                r.lane = a.lane;
                r.vel = a.vel;
                records.push_back(std::move(r));
            }
        }
    };

    emit(0.0);
    for (int k = 0; k < total_steps; ++k) {
        const double t_before = static_cast<double>(k) * kSynthDt;
        for (auto& lane : lanes) {
            std::vector<double> prev_vel(lane.agents.size());
            for (std::size_t i = 0; i < lane.agents.size(); ++i) prev_vel[i] = lane.agents[i].vel;
            advance_agents(lane.agents, no_ghosts, false, kSynthDt, cfg.model, cfg.seed);
            if (cfg.perturbation && t_before >= cfg.perturbation->start &&
                t_before < cfg.perturbation->start + cfg.perturbation->duration) {
                for (std::size_t i = 0; i < lane.agents.size(); ++i) {
                    AgentState& a = lane.agents[i];
                    if (a.id != cfg.perturbation->vehicle_id) continue;
                    const double ramped =
                        std::max(cfg.perturbation->target_speed, prev_vel[i] - kPerturbRamp * kSynthDt);
                    if (a.vel > ramped) {
                        // Undo the integrator's position update and redo it clamped.
                        a.x -= a.vel * kSynthDt;
                        a.vel = ramped;
                        a.x += a.vel * kSynthDt;
                        a.last_accel = (a.vel - prev_vel[i]) / kSynthDt;
                    }
                }
            }
        }
        if ((k + 1) % steps_per_sample == 0) emit(static_cast<double>(k + 1) * kSynthDt);
    }

    return Dataset::from_records(std::move(records), cfg.roadspec);
}

// --- presets ------------------------------------------------------------------
//
// freeflow: all four eastbound lanes cruising in equilibrium a few percent
// under the desired speed. wave: the same arrangement westbound, denser, with
// one mid-platoon vehicle in the HOV lane braking to a crawl, which sets off
// an upstream-running stop-and-go wave while the other lanes keep flowing.

inline SynthConfig freeflow_preset() {
    SynthConfig cfg;
    cfg.road = Road::Eastbound;
    cfg.lanes_used = {-1, -2, -3, -4};
    cfg.n_vehicles = 25;
    cfg.x_start = 0.0;
    cfg.initial_speed = 29.0;
    cfg.model = IdmParams{};
    cfg.initial_spacing = equilibrium_gap(cfg.initial_speed, cfg.model.v0_default, cfg.model);
    cfg.sample_rate = 10.0;
    cfg.duration = 75.0;
    cfg.seed = 1001;
    return cfg;
}

inline SynthConfig wave_preset() {
    SynthConfig cfg;
    cfg.road = Road::Westbound;
    cfg.lanes_used = {-1, -2, -3, -4};
    cfg.n_vehicles = 40;
    cfg.model = IdmParams{};
    cfg.model.a_max = 2.0;
    cfg.initial_speed = 25.5;
    cfg.initial_spacing = equilibrium_gap(cfg.initial_speed, cfg.model.v0_default, cfg.model);
    cfg.x_start = 1360.0;
    cfg.perturbation = Perturbation{synth_vehicle_id(-1, 10), 0.0, 14.0, 2.0};
    cfg.sample_rate = 10.0;
    cfg.duration = 90.0;
    cfg.seed = 2002;
    return cfg;
}

}  // namespace wavecell
