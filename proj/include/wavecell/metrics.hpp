#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wavecell/dataset.hpp"
#include "wavecell/errors.hpp"
#include "wavecell/simlog.hpp"
#include "wavecell/util.hpp"
#include "wavecell/vehicle.hpp"

namespace wavecell {

inline constexpr std::string_view kLogHeader = "step,t,id,kind,lane,x,y,vel,v0,accel";

// One row per vehicle per step, ordered by (step, kind, id) with kind running
// ego < visible < ghost. Ghost rows carry 0 for v0 and accel. Deterministic:
// re-export of the same log is byte-identical.
inline void export_log(const SimLog& log, std::ostream& out) {
    out << kLogHeader << '\n';
    const auto row = [&](int step, double t, const std::string& id, std::string_view kind, int lane,
                         double x, double y, double vel, double v0, double accel) {
        out << step << ',' << fmt_double(t) << ',' << id << ',' << kind << ',' << lane << ','
            << fmt_double(x) << ',' << fmt_double(y) << ',' << fmt_double(vel) << ','
            << fmt_double(v0) << ',' << fmt_double(accel) << '\n';
    };
    for (const auto& e : log.entries) {
        row(e.step, e.t, e.ego.id, "ego", e.ego.lane, e.ego.x, e.ego.y, e.ego.vel, e.ego.v0,
            e.ego.last_accel);
        for (const auto& a : e.visible)
            row(e.step, e.t, a.id, "visible", a.lane, a.x, a.y, a.vel, a.v0, a.last_accel);
        for (const auto& g : e.ghosts)
            row(e.step, e.t, g.id, "ghost", g.lane, g.x, g.y, g.vel, 0.0, 0.0);
    }
}

inline void export_log(const SimLog& log, const std::filesystem::path& path) {
    std::ostringstream ss;
    export_log(log, ss);
    write_file(path, ss.str());
}

// Rebuild a SimLog from its CSV export. Event lists and the termination
// reason are not part of the schema and come back empty.
inline SimLog load_log_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open log " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty log");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kLogHeader)
        throw ParseError(path.string() + ": bad header '" + line + "'");

    SimLog log;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10)
            throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": expected 10 fields");
        int step = 0;
        double t = 0, x = 0, y = 0, vel = 0, v0 = 0, accel = 0;
        int lane = 0;
        if (!parse_int(f[0], step) || !parse_double(f[1], t) || !parse_int(f[4], lane) ||
            !parse_double(f[5], x) || !parse_double(f[6], y) || !parse_double(f[7], vel) ||
            !parse_double(f[8], v0) || !parse_double(f[9], accel))
            throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": malformed field");
        if (log.entries.empty() || log.entries.back().step != step) {
            LogEntry e;
            e.step = step;
            e.t = t;
            log.entries.push_back(std::move(e));
        }
        LogEntry& e = log.entries.back();
        const std::string id(f[2]);
        const std::string_view kind = f[3];
        if (kind == "ego") {
            e.ego = AgentState{id, lane, x, y, vel, v0, 0.0, accel, 0.0};
        } else if (kind == "visible") {
            e.visible.push_back(AgentState{id, lane, x, y, vel, v0, 0.0, accel, 0.0});
        } else if (kind == "ghost") {
            VehicleState g;
            g.id = id;
            g.t = t;
            g.x = x;
            g.y = y;
            g.lane = lane;
            g.vel = vel;
            e.ghosts.push_back(std::move(g));
        } else {
            throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": unknown kind '" +
                             std::string(kind) + "'");
        }
    }
    return log;
}

// Pointwise deviation between the simulated ego and the empirical
// continuation of the same vehicle id.
struct DeviationReport {
    double rmse_x = 0.0;
    double rmse_v = 0.0;
    double max_abs_x = 0.0;
    std::size_t compared_steps = 0;
    std::size_t excluded_steps = 0;  // log timestamps past the empirical span
};

inline DeviationReport ego_deviation(const SimLog& log, const Dataset& dataset) {
    if (log.entries.empty()) throw ConfigError("ego_deviation: empty log");
    const std::string& ego_id = log.entries.front().ego.id;
    if (!dataset.find_trajectory(ego_id))
        throw ConfigError("ego_deviation: ego id '" + ego_id + "' absent from dataset");

    DeviationReport rep;
    double sum_dx2 = 0.0;
    double sum_dv2 = 0.0;
    for (const auto& e : log.entries) {
        const auto s = dataset.interpolate(ego_id, e.t);
        if (!s) {
            rep.excluded_steps += 1;
            continue;
        }
        const double dx = e.ego.x - s->x;
        const double dv = e.ego.vel - s->vel;
        sum_dx2 += dx * dx;
        sum_dv2 += dv * dv;
        rep.max_abs_x = std::max(rep.max_abs_x, std::abs(dx));
        rep.compared_steps += 1;
    }
    if (rep.compared_steps == 0)
        throw ConfigError("ego_deviation: no overlap between log and empirical trajectory");
    rep.rmse_x = std::sqrt(sum_dx2 / static_cast<double>(rep.compared_steps));
    rep.rmse_v = std::sqrt(sum_dv2 / static_cast<double>(rep.compared_steps));
    return rep;
}

// Binned mean of interpolated vehicle speeds, sampled at time-bin centers.
// Cells with no samples are empty, not zero-speed.
struct SpeedField {
    Road road = Road::Westbound;
    std::vector<double> t_edges;  // size nt + 1, strictly increasing
    std::vector<double> x_edges;  // size nx + 1, strictly increasing
    std::vector<double> mean;     // nt * nx, row-major by time bin
    std::vector<int> count;

    std::size_t nt() const { return t_edges.size() - 1; }
    std::size_t nx() const { return x_edges.size() - 1; }
    std::size_t cell(std::size_t ti, std::size_t xi) const { return ti * nx() + xi; }
    bool empty_cell(std::size_t ti, std::size_t xi) const { return count[cell(ti, xi)] == 0; }
};

inline std::vector<double> uniform_edges(double lo, double hi, double width) {
    if (width <= 0.0 || hi <= lo) throw ConfigError("bin edges require hi > lo and width > 0");
    std::vector<double> edges;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
    edges.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) edges.push_back(lo + static_cast<double>(i) * width);
    return edges;
}

inline SpeedField mean_speed_field(const Dataset& dataset, Road road, std::vector<double> t_edges,
                                   std::vector<double> x_edges) {
    for (std::size_t i = 1; i < t_edges.size(); ++i)
        if (t_edges[i] <= t_edges[i - 1]) throw ConfigError("t bin edges must be strictly increasing");
    for (std::size_t i = 1; i < x_edges.size(); ++i)
        if (x_edges[i] <= x_edges[i - 1]) throw ConfigError("x bin edges must be strictly increasing");
    if (t_edges.size() < 2 || x_edges.size() < 2) throw ConfigError("need at least one bin per axis");

    SpeedField field;
    field.road = road;
    field.t_edges = std::move(t_edges);
    field.x_edges = std::move(x_edges);
    field.mean.assign(field.nt() * field.nx(), 0.0);
    field.count.assign(field.nt() * field.nx(), 0);

    for (std::size_t ti = 0; ti < field.nt(); ++ti) {
        const double tc = 0.5 * (field.t_edges[ti] + field.t_edges[ti + 1]);
        for (const auto& traj : dataset.trajectories()) {
            if (traj.road != road) continue;
            const auto s = Dataset::interpolate(traj, tc);
            if (!s || s->x < field.x_edges.front() || s->x > field.x_edges.back()) continue;
            auto it = std::upper_bound(field.x_edges.begin(), field.x_edges.end(), s->x);
            std::size_t xi = static_cast<std::size_t>(it - field.x_edges.begin());
            xi = xi == 0 ? 0 : xi - 1;
            if (xi >= field.nx()) xi = field.nx() - 1;  // x exactly on the last edge
            const std::size_t c = field.cell(ti, xi);
            field.mean[c] += s->vel;
            field.count[c] += 1;
        }
    }
    for (std::size_t c = 0; c < field.mean.size(); ++c)
        if (field.count[c] > 0) field.mean[c] /= static_cast<double>(field.count[c]);
    return field;
}

// A 4-connected component of below-threshold cells. front_slope is the
// least-squares slope, in m/s, of the component's upstream edge (the lowest
// below-threshold x bin per time bin); an upstream-running wave has a
// negative slope.
struct WaveRegion {
    double t_lo = 0.0, t_hi = 0.0;
    double x_lo = 0.0, x_hi = 0.0;
    double min_speed = 0.0;
    double front_slope = 0.0;
    std::size_t cells = 0;
};

inline std::vector<WaveRegion> detect_wave(const SpeedField& field, double threshold,
                                           std::size_t min_cells = 4) {
    if (threshold <= 0.0) throw ConfigError("detect_wave: threshold must be > 0");
    const std::size_t nt = field.nt();
    const std::size_t nx = field.nx();
    std::vector<int> comp(nt * nx, -1);
    const auto low = [&](std::size_t ti, std::size_t xi) {
        const std::size_t c = field.cell(ti, xi);
        return field.count[c] > 0 && field.mean[c] < threshold;
    };

    std::vector<WaveRegion> regions;
    std::vector<std::vector<std::size_t>> members;
    int next_comp = 0;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        for (std::size_t xi = 0; xi < nx; ++xi) {
            if (!low(ti, xi) || comp[field.cell(ti, xi)] != -1) continue;
            std::vector<std::size_t> stack = {field.cell(ti, xi)};
            members.emplace_back();
            comp[field.cell(ti, xi)] = next_comp;
            while (!stack.empty()) {
                const std::size_t c = stack.back();
                stack.pop_back();
                members.back().push_back(c);
                const std::size_t cti = c / nx;
                const std::size_t cxi = c % nx;
                const auto visit = [&](std::size_t nti, std::size_t nxi) {
                    if (nti >= nt || nxi >= nx) return;
                    const std::size_t nc = field.cell(nti, nxi);
                    if (comp[nc] == -1 && low(nti, nxi)) {
                        comp[nc] = next_comp;
                        stack.push_back(nc);
                    }
                };
                if (cti > 0) visit(cti - 1, cxi);
                visit(cti + 1, cxi);
                if (cxi > 0) visit(cti, cxi - 1);
                visit(cti, cxi + 1);
            }
            ++next_comp;
        }
    }

    for (const auto& cells : members) {
        if (cells.size() < min_cells) continue;
        WaveRegion r;
        r.cells = cells.size();
        r.min_speed = std::numeric_limits<double>::infinity();
        std::size_t ti_lo = nt, ti_hi = 0, xi_lo = nx, xi_hi = 0;
        std::map<std::size_t, std::size_t> upstream_edge;  // time bin -> lowest x bin
        for (std::size_t c : cells) {
            const std::size_t cti = c / nx;
            const std::size_t cxi = c % nx;
            ti_lo = std::min(ti_lo, cti);
            ti_hi = std::max(ti_hi, cti);
            xi_lo = std::min(xi_lo, cxi);
            xi_hi = std::max(xi_hi, cxi);
            r.min_speed = std::min(r.min_speed, field.mean[c]);
            auto [it, inserted] = upstream_edge.try_emplace(cti, cxi);
            if (!inserted) it->second = std::min(it->second, cxi);
        }
        r.t_lo = field.t_edges[ti_lo];
        r.t_hi = field.t_edges[ti_hi + 1];
        r.x_lo = field.x_edges[xi_lo];
        r.x_hi = field.x_edges[xi_hi + 1];
        if (upstream_edge.size() >= 2) {
            double st = 0, sx = 0, stt = 0, stx = 0;
            const auto n = static_cast<double>(upstream_edge.size());
            for (const auto& [cti, cxi] : upstream_edge) {
                const double t = 0.5 * (field.t_edges[cti] + field.t_edges[cti + 1]);
                const double x = 0.5 * (field.x_edges[cxi] + field.x_edges[cxi + 1]);
                st += t;
                sx += x;
                stt += t * t;
                stx += t * x;
            }
            const double denom = n * stt - st * st;
            r.front_slope = denom != 0.0 ? (n * stx - st * sx) / denom : 0.0;
        }
        regions.push_back(r);
    }
    std::sort(regions.begin(), regions.end(), [](const WaveRegion& a, const WaveRegion& b) {
        return a.t_lo != b.t_lo ? a.t_lo < b.t_lo : a.x_lo < b.x_lo;
    });
    return regions;
}

}  // namespace wavecell
