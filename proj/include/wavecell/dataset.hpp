#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavecell/errors.hpp"
#include "wavecell/util.hpp"
#include "wavecell/vehicle.hpp"

namespace wavecell {

// Weight converting seconds to meters in the spatiotemporal closeness metric
// d = |dx| + kClosestAlpha * |dt|; roughly the free-flow speed.
inline constexpr double kClosestAlpha = 30.0;

inline constexpr std::string_view kDatasetHeader = "id,road,t,x,y,lane,vel";

// An immutable, spatiotemporally indexed trajectory collection. Records are
// grouped per vehicle id and sorted by time; a coarse time-bucket index
// accelerates interval queries but every result is derivable from the
// per-id sequences alone. Safe for concurrent read-only use once built.
class Dataset {
public:
    struct Trajectory {
        std::string id;
        Road road = Road::Westbound;
        std::vector<VehicleRecord> samples;  // strictly increasing t
    };

    Dataset() = default;

    // Validates, groups, sorts and indexes raw records. `lines`, when given,
    // maps each record to its 1-based source line for error reporting.
    static Dataset from_records(std::vector<VehicleRecord> records, RoadSpec spec,
                                const std::vector<std::size_t>* lines = nullptr) {
        Dataset ds;
        ds.spec_ = std::move(spec);
        for (std::size_t i = 0; i < records.size(); ++i) {
            validate_record(records[i], ds.spec_, lines ? (*lines)[i] : 0);
        }

        std::map<std::string, std::vector<VehicleRecord>> grouped;
        for (auto& r : records) grouped[r.id].push_back(std::move(r));

        ds.trajectories_.reserve(grouped.size());
        for (auto& [id, samples] : grouped) {
            std::stable_sort(samples.begin(), samples.end(),
                             [](const VehicleRecord& a, const VehicleRecord& b) { return a.t < b.t; });
            for (std::size_t i = 1; i < samples.size(); ++i) {
                if (samples[i].t == samples[i - 1].t)
                    throw ParseError("duplicate timestamp t=" + fmt_double(samples[i].t) +
                                     " for vehicle '" + id + "'");
                if (samples[i].road != samples[i - 1].road)
                    throw ParseError("vehicle '" + id + "' appears on more than one road");
            }
            Trajectory traj;
            traj.id = id;
            traj.road = samples.front().road;
            traj.samples = std::move(samples);
            ds.trajectories_.push_back(std::move(traj));
        }
        ds.build_index();
        return ds;
    }

    const RoadSpec& road_spec() const { return spec_; }
    const std::vector<Trajectory>& trajectories() const { return trajectories_; }
    bool empty() const { return trajectories_.empty(); }

    std::size_t record_count() const {
        std::size_t n = 0;
        for (const auto& t : trajectories_) n += t.samples.size();
        return n;
    }

    // [t_min, t_max] over all records; nullopt for an empty dataset.
    std::optional<std::pair<double, double>> t_span() const { return t_span_; }

    const Trajectory* find_trajectory(std::string_view id) const {
        auto it = std::lower_bound(trajectories_.begin(), trajectories_.end(), id,
                                   [](const Trajectory& t, std::string_view key) { return t.id < key; });
        if (it == trajectories_.end() || it->id != id) return nullptr;
        return &*it;
    }

    // State of `id` at time t. x and vel are linearly interpolated between the
    // bracketing samples; lane and y are taken from the nearer sample (earlier
    // on a tie). Absent outside the vehicle's recorded span or for unknown ids.
    std::optional<VehicleState> interpolate(std::string_view id, double t) const {
        const Trajectory* traj = find_trajectory(id);
        if (!traj) return std::nullopt;
        return interpolate(*traj, t);
    }

    static std::optional<VehicleState> interpolate(const Trajectory& traj, double t) {
        const auto& s = traj.samples;
        if (s.empty() || t < s.front().t || t > s.back().t) return std::nullopt;
        auto hi = std::lower_bound(s.begin(), s.end(), t,
                                   [](const VehicleRecord& r, double tt) { return r.t < tt; });
        if (hi->t == t) return *hi;  // knot: sample verbatim
        const VehicleRecord& b = *hi;
        const VehicleRecord& a = *(hi - 1);
        const double u = (t - a.t) / (b.t - a.t);
        VehicleState out;
        out.id = traj.id;
        out.road = traj.road;
        out.t = t;
        out.x = a.x + u * (b.x - a.x);
        out.vel = a.vel + u * (b.vel - a.vel);
        const bool nearer_b = (t - a.t) > (b.t - t);
        out.lane = nearer_b ? b.lane : a.lane;
        out.y = nearer_b ? b.y : a.y;
        return out;
    }

    // All vehicles interpolable at t on `road` with x in [x_lo, x_hi],
    // each at most once, ordered by id.
    std::vector<VehicleState> query_interval(Road road, double t, double x_lo, double x_hi) const {
        if (x_lo > x_hi) throw ConfigError("query_interval: x_lo > x_hi");
        std::vector<VehicleState> out;
        for (const Trajectory* traj : candidates_at(t)) {
            if (traj->road != road) continue;
            auto s = interpolate(*traj, t);
            if (s && s->x >= x_lo && s->x <= x_hi) out.push_back(std::move(*s));
        }
        return out;
    }

    // The record on (road, lane) minimizing d = |x_rec - x| + alpha * |t_rec - t|.
    // Ties break toward smaller |t_rec - t|, then lexicographically smaller id,
    // then earlier t. Throws NoCandidateError when the lane is empty everywhere.
    VehicleState find_closest(Road road, int lane, double x, double t) const {
        const VehicleRecord* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        double best_dt = std::numeric_limits<double>::infinity();
        for (const auto& traj : trajectories_) {
            if (traj.road != road) continue;
            for (const auto& rec : traj.samples) {
                if (rec.lane != lane) continue;
                const double dt = std::abs(rec.t - t);
                const double d = std::abs(rec.x - x) + kClosestAlpha * dt;
                if (d < best_d || (d == best_d && (dt < best_dt ||
                        (dt == best_dt && best && (rec.id < best->id ||
                            (rec.id == best->id && rec.t < best->t)))))) {
                    best = &rec;
                    best_d = d;
                    best_dt = dt;
                }
            }
        }
        if (!best)
            throw NoCandidateError("no vehicle on " + std::string(to_string(road)) +
                                   " lane " + std::to_string(lane) + " anywhere in the dataset");
        return *best;
    }

private:
    static void validate_record(const VehicleRecord& r, const RoadSpec& spec, std::size_t line) {
        const auto where = [&](const std::string& what) {
            std::string msg = line ? "line " + std::to_string(line) + ": " + what : what;
            return ParseError(msg);
        };
        if (r.id.empty()) throw where("empty vehicle id");
        if (!spec.has_lane(r.lane))
            throw where("lane " + std::to_string(r.lane) + " outside {-1,-2,-3,-4}");
        if (!std::isfinite(r.t) || !std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.vel))
            throw where("non-finite value");
        if (r.x < 0.0 || r.x > spec.length)
            throw where("x=" + fmt_double(r.x) + " outside [0, " + fmt_double(spec.length) + "]");
        if (r.vel < 0.0) throw where("negative velocity " + fmt_double(r.vel));
    }

    void build_index() {
        if (trajectories_.empty()) return;
        double t_min = std::numeric_limits<double>::infinity();
        double t_max = -std::numeric_limits<double>::infinity();
        for (const auto& traj : trajectories_) {
            t_min = std::min(t_min, traj.samples.front().t);
            t_max = std::max(t_max, traj.samples.back().t);
        }
        t_span_ = {t_min, t_max};
        bucket_width_ = std::max((t_max - t_min) / static_cast<double>(kBuckets), 1e-9);
        buckets_.assign(kBuckets, {});
        for (std::size_t i = 0; i < trajectories_.size(); ++i) {
            const auto& traj = trajectories_[i];
            const std::size_t lo = bucket_of(traj.samples.front().t);
            const std::size_t hi = bucket_of(traj.samples.back().t);
            for (std::size_t b = lo; b <= hi; ++b) buckets_[b].push_back(i);
        }
    }

    std::size_t bucket_of(double t) const {
        const double rel = (t - t_span_->first) / bucket_width_;
        const auto b = static_cast<long long>(rel);
        if (b < 0) return 0;
        if (b >= static_cast<long long>(kBuckets)) return kBuckets - 1;
        return static_cast<std::size_t>(b);
    }

    std::vector<const Trajectory*> candidates_at(double t) const {
        std::vector<const Trajectory*> out;
        if (!t_span_ || t < t_span_->first || t > t_span_->second) return out;
        for (std::size_t i : buckets_[bucket_of(t)]) {
            const auto& traj = trajectories_[i];
            if (t >= traj.samples.front().t && t <= traj.samples.back().t) out.push_back(&traj);
        }
        return out;
    }

    static constexpr std::size_t kBuckets = 64;

    RoadSpec spec_;
    std::vector<Trajectory> trajectories_;  // sorted by id
    std::optional<std::pair<double, double>> t_span_;
    double bucket_width_ = 1.0;
    std::vector<std::vector<std::size_t>> buckets_;
};

// --- CSV ingestion / export -------------------------------------------------
//
// Schema: UTF-8, header `id,road,t,x,y,lane,vel`, comma separated, `.` decimal
// point, LF or CRLF endings. road is Westbound or Eastbound.

inline Dataset load_dataset(std::istream& in, RoadSpec spec, const std::string& source = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) {
        // No header at all: treat as empty input only if the stream is empty.
        throw ParseError(source + ": empty input, expected header '" + std::string(kDatasetHeader) + "'");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kDatasetHeader)
        throw ParseError(source + ": bad header '" + line + "', expected '" + std::string(kDatasetHeader) + "'");

    std::vector<VehicleRecord> records;
    std::vector<std::size_t> lines;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7)
            throw ParseError(source + ": line " + std::to_string(lineno) + ": expected 7 fields, got " +
                             std::to_string(f.size()));
        VehicleRecord r;
        r.id = std::string(f[0]);
        const auto road = parse_road(f[1]);
        if (!road)
            throw ParseError(source + ": line " + std::to_string(lineno) + ": unknown road '" +
                             std::string(f[1]) + "'");
        r.road = *road;
        if (!parse_double(f[2], r.t) || !parse_double(f[3], r.x) || !parse_double(f[4], r.y) ||
            !parse_int(f[5], r.lane) || !parse_double(f[6], r.vel))
            throw ParseError(source + ": line " + std::to_string(lineno) + ": malformed numeric field");
        records.push_back(std::move(r));
        lines.push_back(lineno);
    }
    try {
        return Dataset::from_records(std::move(records), std::move(spec), &lines);
    } catch (const ParseError& e) {
        throw ParseError(source + ": " + e.what());
    }
}

inline Dataset load_dataset(const std::filesystem::path& path, RoadSpec spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset " + path.string());
    return load_dataset(in, std::move(spec), path.string());
}

// Canonical export: rows ordered by (id, t). load_dataset(export_dataset(d))
// reproduces the record set exactly; re-export is byte-identical.
inline void export_dataset(const Dataset& ds, std::ostream& out) {
    out << kDatasetHeader << '\n';
    for (const auto& traj : ds.trajectories()) {
        for (const auto& r : traj.samples) {
            out << r.id << ',' << to_string(r.road) << ',' << fmt_double(r.t) << ',' << fmt_double(r.x)
                << ',' << fmt_double(r.y) << ',' << r.lane << ',' << fmt_double(r.vel) << '\n';
        }
    }
}

inline void export_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ostringstream ss;
    export_dataset(ds, ss);
    write_file(path, ss.str());
}

}  // namespace wavecell
