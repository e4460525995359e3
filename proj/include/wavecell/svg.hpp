#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wavecell/dataset.hpp"
#include "wavecell/errors.hpp"
#include "wavecell/simlog.hpp"
#include "wavecell/util.hpp"

namespace wavecell {

struct RenderOptions {
    std::optional<int> lane_filter;       // draw only this lane's empirical traces
    double color_vmax = 35.0;             // speed mapped to the top of the color scale
    double width = 900.0, height = 600.0; // px
};

namespace detail {

// 0 m/s -> red, mid -> yellow, color_vmax -> green.
inline std::string speed_color(double vel, double vmax) {
    const double u = std::clamp(vel / vmax, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255.0 * std::clamp(2.0 * (1.0 - u), 0.0, 1.0)));
    const int g = static_cast<int>(std::lround(210.0 * std::clamp(2.0 * u, 0.0, 1.0)));
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x30", r, g);
    return buf;
}

inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

// Time-space diagram: empirical trajectories as speed-colored segments, the
// simulated ego as a heavy black overlay. Time advances to the right,
// direction of travel is up. Throws when the window misses the log entirely
// rather than writing a blank file.
inline std::string render_time_space(const SimLog& log, const Dataset& dataset, double t0,
                                     double t1, double x0, double x1,
                                     const RenderOptions& opt = {}) {
    if (!(t1 > t0) || !(x1 > x0)) throw ConfigError("render window must have positive extent");

    const double ml = 60.0, mr = 15.0, mt = 15.0, mb = 40.0;
    const double pw = opt.width - ml - mr;
    const double ph = opt.height - mt - mb;
    const auto sx = [&](double t) { return ml + (t - t0) / (t1 - t0) * pw; };
    const auto sy = [&](double x) { return mt + ph - (x - x0) / (x1 - x0) * ph; };

    std::vector<std::pair<double, double>> ego_pts;
    for (const auto& e : log.entries) {
        if (e.t < t0 || e.t > t1) continue;
        ego_pts.emplace_back(e.t, e.ego.x);
    }
    if (ego_pts.empty())
        throw ConfigError("render window does not overlap the simulated episode");

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::px(opt.width)
        << "\" height=\"" << detail::px(opt.height) << "\" viewBox=\"0 0 "
        << detail::px(opt.width) << ' ' << detail::px(opt.height) << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << detail::px(opt.width) << "\" height=\""
        << detail::px(opt.height) << "\" fill=\"#ffffff\"/>\n";
    out << "<clipPath id=\"plot\"><rect x=\"" << detail::px(ml) << "\" y=\"" << detail::px(mt)
        << "\" width=\"" << detail::px(pw) << "\" height=\"" << detail::px(ph)
        << "\"/></clipPath>\n";
    out << "<g clip-path=\"url(#plot)\">\n";

    // empirical traces, one segment per consecutive sample pair
    for (const auto& traj : dataset.trajectories()) {
        const auto& s = traj.samples;
        for (std::size_t i = 1; i < s.size(); ++i) {
            const auto& a = s[i - 1];
            const auto& b = s[i];
            if (b.t < t0 || a.t > t1) continue;
            if (std::max(a.x, b.x) < x0 || std::min(a.x, b.x) > x1) continue;
            if (opt.lane_filter && a.lane != *opt.lane_filter) continue;
            out << "<line x1=\"" << detail::px(sx(a.t)) << "\" y1=\"" << detail::px(sy(a.x))
                << "\" x2=\"" << detail::px(sx(b.t)) << "\" y2=\"" << detail::px(sy(b.x))
                << "\" stroke=\"" << detail::speed_color(0.5 * (a.vel + b.vel), opt.color_vmax)
                << "\" stroke-width=\"1.2\"/>\n";
        }
    }

    // ego overlay
    out << "<polyline fill=\"none\" stroke=\"#000000\" stroke-width=\"2.5\" points=\"";
    for (std::size_t i = 0; i < ego_pts.size(); ++i) {
        if (i) out << ' ';
        out << detail::px(sx(ego_pts[i].first)) << ',' << detail::px(sy(ego_pts[i].second));
    }
    out << "\"/>\n</g>\n";

    // frame and ticks
    out << "<rect x=\"" << detail::px(ml) << "\" y=\"" << detail::px(mt) << "\" width=\""
        << detail::px(pw) << "\" height=\"" << detail::px(ph)
        << "\" fill=\"none\" stroke=\"#444444\"/>\n";
    const auto nice_step = [](double span) {
        const double raw = span / 6.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        for (double m : {1.0, 2.0, 5.0, 10.0})
            if (raw <= m * mag) return m * mag;
        return 10.0 * mag;
    };
    const double tstep = nice_step(t1 - t0);
    for (double t = std::ceil(t0 / tstep) * tstep; t <= t1 + 1e-9; t += tstep) {
        out << "<line x1=\"" << detail::px(sx(t)) << "\" y1=\"" << detail::px(mt + ph)
            << "\" x2=\"" << detail::px(sx(t)) << "\" y2=\"" << detail::px(mt + ph + 5)
            << "\" stroke=\"#444444\"/>\n";
        out << "<text x=\"" << detail::px(sx(t)) << "\" y=\"" << detail::px(mt + ph + 18)
            << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_double(t) << "</text>\n";
    }
    const double xstep = nice_step(x1 - x0);
    for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-9; x += xstep) {
        out << "<line x1=\"" << detail::px(ml - 5) << "\" y1=\"" << detail::px(sy(x))
            << "\" x2=\"" << detail::px(ml) << "\" y2=\"" << detail::px(sy(x))
            << "\" stroke=\"#444444\"/>\n";
        out << "<text x=\"" << detail::px(ml - 8) << "\" y=\"" << detail::px(sy(x) + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_double(x) << "</text>\n";
    }
    out << "<text x=\"" << detail::px(ml + pw / 2) << "\" y=\"" << detail::px(mt + ph + 34)
        << "\" font-size=\"12\" text-anchor=\"middle\">time (s)</text>\n";
    out << "<text x=\"14\" y=\"" << detail::px(mt + ph / 2)
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << detail::px(mt + ph / 2) << ")\">position (m)</text>\n";
    out << "</svg>\n";
    return out.str();
}

inline void render_time_space(const SimLog& log, const Dataset& dataset, double t0, double t1,
                              double x0, double x1, const std::filesystem::path& path,
                              const RenderOptions& opt = {}) {
    write_file(path, render_time_space(log, dataset, t0, t1, x0, x1, opt));
}

}  // namespace wavecell
