#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavecell/cosim.hpp"
#include "wavecell/errors.hpp"
#include "wavecell/metrics.hpp"
#include "wavecell/synthgen.hpp"
#include "wavecell/util.hpp"

namespace wavecell {

// Scenario file: {"dataset": path, "sim": {...}, "outputs": {...}}. The sim
// section mirrors SimConfig field for field; unknown keys anywhere are
// rejected by name so a typo cannot silently fall back to a default.
struct ScenarioFile {
    std::filesystem::path dataset;
    SimConfig sim;
    std::filesystem::path log_path;
    std::filesystem::path svg_path;
    std::filesystem::path report_path;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void get_if_present(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for '" + key + "'");
    }
}

inline Road get_road(const json& obj, const char* key, Road fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) throw ConfigError(where + ": bad value for '" + key + "'");
    const auto road = parse_road(obj.at(key).get<std::string>());
    if (!road) throw ConfigError(where + ": road must be Westbound or Eastbound");
    return *road;
}

inline IdmParams parse_model(const json& obj, IdmParams base, const std::string& where) {
    reject_unknown_keys(obj, {"a_max", "b", "s0", "T", "delta", "v0_default", "vehicle_length_range"},
                        where);
    get_if_present(obj, "a_max", base.a_max, where);
    get_if_present(obj, "b", base.b, where);
    get_if_present(obj, "s0", base.s0, where);
    get_if_present(obj, "T", base.T, where);
    get_if_present(obj, "delta", base.delta, where);
    get_if_present(obj, "v0_default", base.v0_default, where);
    if (obj.contains("vehicle_length_range")) {
        std::vector<double> range;
        get_if_present(obj, "vehicle_length_range", range, where);
        if (range.size() != 2)
            throw ConfigError(where + ": vehicle_length_range must be [min, max]");
        base.length_min = range[0];
        base.length_max = range[1];
    }
    return base;
}

inline json model_to_json(const IdmParams& p) {
    return json{{"a_max", p.a_max},
                {"b", p.b},
                {"s0", p.s0},
                {"T", p.T},
                {"delta", p.delta},
                {"v0_default", p.v0_default},
                {"vehicle_length_range", {p.length_min, p.length_max}}};
}

inline json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
}

}  // namespace detail

inline SimConfig parse_sim_config(const nlohmann::json& obj, const std::string& where = "sim") {
    detail::reject_unknown_keys(obj,
                                {"t_max", "dt", "vel_default", "road", "w_visible", "w_ghost",
                                 "ego_lane", "ego_x", "ego_t", "seed", "model", "phantom_leader",
                                 "lane_changes", "min_spawn_gap"},
                                where);
    SimConfig cfg;
    detail::get_if_present(obj, "t_max", cfg.t_max, where);
    detail::get_if_present(obj, "dt", cfg.dt, where);
    detail::get_if_present(obj, "vel_default", cfg.vel_default, where);
    cfg.road = detail::get_road(obj, "road", cfg.road, where);
    detail::get_if_present(obj, "w_visible", cfg.w_visible, where);
    detail::get_if_present(obj, "w_ghost", cfg.w_ghost, where);
    detail::get_if_present(obj, "ego_lane", cfg.ego_lane, where);
    detail::get_if_present(obj, "ego_x", cfg.ego_x, where);
    detail::get_if_present(obj, "ego_t", cfg.ego_t, where);
    detail::get_if_present(obj, "seed", cfg.seed, where);
    detail::get_if_present(obj, "phantom_leader", cfg.phantom_leader, where);
    detail::get_if_present(obj, "lane_changes", cfg.lane_changes, where);
    detail::get_if_present(obj, "min_spawn_gap", cfg.min_spawn_gap, where);
    if (obj.contains("model")) cfg.model = detail::parse_model(obj.at("model"), cfg.model, where + ".model");
    cfg.validate();
    return cfg;
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
    const auto doc = detail::parse_json_file(path);
    if (!doc.is_object()) throw ConfigError(path.string() + ": scenario must be a JSON object");
    detail::reject_unknown_keys(doc, {"dataset", "sim", "outputs"}, path.string());
    ScenarioFile sc;
    if (!doc.contains("dataset") || !doc.at("dataset").is_string())
        throw ConfigError(path.string() + ": missing 'dataset' path");
    sc.dataset = doc.at("dataset").get<std::string>();
    if (!doc.contains("sim")) throw ConfigError(path.string() + ": missing 'sim' section");
    sc.sim = parse_sim_config(doc.at("sim"), path.string() + ": sim");
    if (doc.contains("outputs")) {
        const auto& outs = doc.at("outputs");
        detail::reject_unknown_keys(outs, {"log", "svg", "report"}, path.string() + ": outputs");
        std::string s;
        detail::get_if_present(outs, "log", s, path.string());
        sc.log_path = s;
        s.clear();
        detail::get_if_present(outs, "svg", s, path.string());
        sc.svg_path = s;
        s.clear();
        detail::get_if_present(outs, "report", s, path.string());
        sc.report_path = s;
    }
    return sc;
}

inline SynthConfig parse_synth_config(const nlohmann::json& obj, const std::string& where) {
    detail::reject_unknown_keys(obj,
                                {"n_vehicles", "road", "lanes_used", "x_start", "initial_spacing",
                                 "initial_speed", "model", "perturbation", "sample_rate", "duration",
                                 "seed"},
                                where);
    SynthConfig cfg;
    detail::get_if_present(obj, "n_vehicles", cfg.n_vehicles, where);
    cfg.road = detail::get_road(obj, "road", cfg.road, where);
    detail::get_if_present(obj, "lanes_used", cfg.lanes_used, where);
    detail::get_if_present(obj, "x_start", cfg.x_start, where);
    detail::get_if_present(obj, "initial_spacing", cfg.initial_spacing, where);
    detail::get_if_present(obj, "initial_speed", cfg.initial_speed, where);
    detail::get_if_present(obj, "sample_rate", cfg.sample_rate, where);
    detail::get_if_present(obj, "duration", cfg.duration, where);
    detail::get_if_present(obj, "seed", cfg.seed, where);
    if (obj.contains("model"))
        cfg.model = detail::parse_model(obj.at("model"), cfg.model, where + ".model");
    if (obj.contains("perturbation") && !obj.at("perturbation").is_null()) {
        const auto& p = obj.at("perturbation");
        detail::reject_unknown_keys(p, {"vehicle_id", "start", "duration", "target_speed"},
                                    where + ".perturbation");
        Perturbation pert;
        detail::get_if_present(p, "vehicle_id", pert.vehicle_id, where);
        detail::get_if_present(p, "start", pert.start, where);
        detail::get_if_present(p, "duration", pert.duration, where);
        detail::get_if_present(p, "target_speed", pert.target_speed, where);
        cfg.perturbation = pert;
    }
    cfg.validate();
    return cfg;
}

inline SynthConfig load_synth_config(const std::filesystem::path& path) {
    return parse_synth_config(detail::parse_json_file(path), path.string());
}

inline nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
    nlohmann::json doc{{"n_vehicles", cfg.n_vehicles},
                       {"road", std::string(to_string(cfg.road))},
                       {"lanes_used", cfg.lanes_used},
                       {"x_start", cfg.x_start},
                       {"initial_spacing", cfg.initial_spacing},
                       {"initial_speed", cfg.initial_speed},
                       {"model", detail::model_to_json(cfg.model)},
                       {"sample_rate", cfg.sample_rate},
                       {"duration", cfg.duration},
                       {"seed", cfg.seed}};
    if (cfg.perturbation) {
        doc["perturbation"] = {{"vehicle_id", cfg.perturbation->vehicle_id},
                               {"start", cfg.perturbation->start},
                               {"duration", cfg.perturbation->duration},
                               {"target_speed", cfg.perturbation->target_speed}};
    }
    return doc;
}

// Comparison report: deviation metrics plus a wave-region report
// {regions, threshold, bins} over the empirical dataset.
inline nlohmann::json comparison_report(const DeviationReport& dev,
                                        const std::vector<WaveRegion>& regions, double threshold,
                                        const SpeedField& field) {
    nlohmann::json waves;
    waves["threshold"] = threshold;
    waves["bins"] = {{"t_range", {field.t_edges.front(), field.t_edges.back()}},
                     {"x_range", {field.x_edges.front(), field.x_edges.back()}},
                     {"t_width", field.t_edges[1] - field.t_edges[0]},
                     {"x_width", field.x_edges[1] - field.x_edges[0]}};
    waves["regions"] = nlohmann::json::array();
    for (const auto& r : regions) {
        waves["regions"].push_back({{"t_span", {r.t_lo, r.t_hi}},
                                    {"x_span", {r.x_lo, r.x_hi}},
                                    {"min_speed", r.min_speed},
                                    {"front_slope", r.front_slope},
                                    {"cells", r.cells}});
    }
    return nlohmann::json{{"rmse_x", dev.rmse_x},
                          {"rmse_v", dev.rmse_v},
                          {"max_abs_x", dev.max_abs_x},
                          {"compared_steps", dev.compared_steps},
                          {"excluded_steps", dev.excluded_steps},
                          {"waves", waves}};
}

}  // namespace wavecell
