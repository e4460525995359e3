#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wavecell {

enum class Road { Westbound, Eastbound };

inline std::string_view to_string(Road r) {
    return r == Road::Westbound ? "Westbound" : "Eastbound";
}

inline std::optional<Road> parse_road(std::string_view s) {
    if (s == "Westbound") return Road::Westbound;
    if (s == "Eastbound") return Road::Eastbound;
    return std::nullopt;
}

struct LaneSpec {
    int id = 0;
    bool hov = false;
};

// Geometry of one instrumented freeway segment. Lane ids are negative and
// descend left to right: -1 is the leftmost (HOV) lane.
struct RoadSpec {
    std::string name;
    double length = 0.0;         // meters
    std::vector<LaneSpec> lanes;
    double lane_width = 3.7;     // meters

    bool has_lane(int lane) const {
        for (const auto& l : lanes)
            if (l.id == lane) return true;
        return false;
    }

    // Lateral offset of a lane center, measured from the left road edge.
    double lane_center_y(int lane) const {
        return (static_cast<double>(-lane) - 0.5) * lane_width;
    }
};

inline constexpr double kMileMeters = 1609.34;

// The 1-mile, 4-lane segment both scenario roads share.
inline RoadSpec i24_segment() {
    RoadSpec spec;
    spec.name = "I-24 mile 60.6-61.6";
    spec.length = kMileMeters;
    spec.lanes = {{-1, true}, {-2, false}, {-3, false}, {-4, false}};
    spec.lane_width = 3.7;
    return spec;
}

// One timestamped kinematic sample of one vehicle. x is the longitudinal
// position in meters, increasing in the direction of travel on both roads.
struct VehicleState {
    std::string id;
    Road road = Road::Westbound;
    double t = 0.0;    // unix timestamp, seconds
    double x = 0.0;    // meters along road
    double y = 0.0;    // meters from left road edge
    int lane = -1;     // {-1, -2, -3, -4}
    double vel = 0.0;  // m/s, >= 0
};

// A raw dataset row has the same shape as an interpolated state.
using VehicleRecord = VehicleState;

}  // namespace wavecell
