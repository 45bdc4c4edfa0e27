#include "bathynav/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace bathynav {

std::vector<Segment> contour_segments(const Grid &values, const GridGeometry &geometry, double level, int stride) {
    std::vector<Segment> out;
    stride = std::max(1, stride);
    const auto rows = int(values.rows()), cols = int(values.cols());
    auto at = [&](int r, int c) { return values(std::min(r, rows - 1), std::min(c, cols - 1)); };
    auto pos = [&](int r, int c) { return geometry.center({std::min(r, rows - 1), std::min(c, cols - 1)}); };
    auto lerp = [&](const Vec2 &p, double vp, const Vec2 &q, double vq) -> Vec2 {
        const double t = vq == vp ? 0.5 : (level - vp) / (vq - vp);
        return p + t * (q - p);
    };
    for (int r = 0; r + 1 < rows; r += stride) {
        for (int c = 0; c + 1 < cols; c += stride) {
            // Corners counter-clockwise from the lower left.
            const int r1 = r + stride, c1 = c + stride;
            const std::array<Vec2, 4> p{pos(r, c), pos(r, c1), pos(r1, c1), pos(r1, c)};
            const std::array<double, 4> v{at(r, c), at(r, c1), at(r1, c1), at(r1, c)};
            int mask = 0;
            for (int k = 0; k < 4; ++k) { mask |= (v[std::size_t(k)] >= level ? 1 : 0) << k; }
            if (mask == 0 || mask == 15) { continue; }
            auto edge = [&](int k) {
                const auto i = std::size_t(k), j = std::size_t((k + 1) % 4);
                return lerp(p[i], v[i], p[j], v[j]);
            };
            std::vector<int> crossings;
            for (int k = 0; k < 4; ++k) {
                if (((mask >> k) & 1) != ((mask >> ((k + 1) % 4)) & 1)) { crossings.push_back(k); }
            }
            if (crossings.size() == 2) {
                out.push_back({edge(crossings[0]), edge(crossings[1])});
            } else {
                // Saddle: pair edges according to the center value.
                const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                const bool joined = (center >= level) == bool(mask & 1);
                if (joined) {
                    out.push_back({edge(0), edge(1)});
                    out.push_back({edge(2), edge(3)});
                } else {
                    out.push_back({edge(3), edge(0)});
                    out.push_back({edge(1), edge(2)});
                }
            }
        }
    }
    return out;
}

namespace {

std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string color(double t) {
    // Blue (slow) to yellow (fast).
    t = std::clamp(t, 0.0, 1.0);
    const int r = int(std::lround(40 + 215 * t)), g = int(std::lround(60 + 160 * t)), b = int(std::lround(200 - 170 * t));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string render_episode_svg(const DepthMap &map, const EpisodeRecord &episode, double goal_radius,
                               const SvgOptions &options) {
    const GridGeometry &geo = map.geometry();
    const double scale = options.pixels / std::max(geo.width(), geo.height());
    const double w = geo.width() * scale, h = geo.height() * scale;
    auto X = [&](double x) { return x * scale; };
    auto Y = [&](double y) { return h - y * scale; };
    const int stride = std::max(1, int(std::ceil(double(std::max(geo.cols, geo.rows)) / options.max_samples)));

    std::ostringstream os;
    os.precision(6);
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h + 24 << "\" viewBox=\"0 0 "
       << w << ' ' << h + 24 << "\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"#f4f8fb\"/>\n";

    const double limit = map.depth_limit();
    struct Level {
        double value;
        const char *stroke;
        double width;
        const char *label;
    };
    std::vector<Level> levels{{1e-9, "#6b4f2a", 1.5, "shoreline"},
                              {limit / 3.0, "#7fb07f", 0.8, "band lower edge"},
                              {2.0 * limit / 3.0, "#7fb07f", 0.8, "band upper edge"},
                              {limit, "#d62728", 2.0, "depth limit"}};
    for (double d = 1.0; d < map.params().max_depth; d += 1.0) {
        if (std::abs(d - limit) > 1e-9) { levels.push_back({d, "#9bb4cc", 0.5, "isobath"}); }
    }
    for (const Level &lv : levels) {
        const auto segs = contour_segments(map.depths(), geo, lv.value, stride);
        if (segs.empty()) { continue; }
        os << "<path class=\"contour\" data-level=\"" << lv.value << "\" data-label=\"" << lv.label
           << "\" fill=\"none\" stroke=\"" << lv.stroke << "\" stroke-width=\"" << lv.width << "\" d=\"";
        for (const Segment &s : segs) {
            os << 'M' << X(s.a.x()) << ' ' << Y(s.a.y()) << 'L' << X(s.b.x()) << ' ' << Y(s.b.y());
        }
        os << "\"/>\n";
    }

    // Trajectory, one segment per step, colored by speed over ground.
    const double vmax = std::max(1e-9, options.max_speed);
    Vec2 prev = episode.start.position();
    for (const StepRecord &s : episode.steps) {
        const Vec2 p = s.state.position();
        const double speed = std::hypot(s.state.u, s.state.v);
        os << "<line x1=\"" << X(prev.x()) << "\" y1=\"" << Y(prev.y()) << "\" x2=\"" << X(p.x()) << "\" y2=\"" << Y(p.y())
           << "\" stroke=\"" << color(speed / vmax) << "\" stroke-width=\"2\" stroke-linecap=\"round\"/>\n";
        prev = p;
    }

    os << "<circle class=\"goal-radius\" cx=\"" << X(episode.goal.x()) << "\" cy=\"" << Y(episode.goal.y()) << "\" r=\""
       << goal_radius * scale << "\" fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"3 2\"/>\n"
       << "<circle class=\"goal\" cx=\"" << X(episode.goal.x()) << "\" cy=\"" << Y(episode.goal.y())
       << "\" r=\"4\" fill=\"#d62728\"/>\n"
       << "<circle class=\"start\" cx=\"" << X(episode.start.x) << "\" cy=\"" << Y(episode.start.y)
       << "\" r=\"4\" fill=\"#2ca02c\"/>\n"
       << "<text x=\"4\" y=\"" << h + 17 << "\" font-family=\"sans-serif\" font-size=\"12\">map " << escape(episode.map_id)
       << ", seed " << episode.seed << ", " << to_string(episode.outcome) << ", " << episode.steps.size()
       << " steps; red line: depth limit " << limit << " m</text>\n"
       << "</svg>\n";
    return os.str();
}

}  // namespace bathynav
