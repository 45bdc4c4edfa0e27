#pragma once

#include <string>
#include <vector>

#include "bathynav/env.hpp"

namespace bathynav {

struct Segment {
    Vec2 a, b;
};

/// Marching-squares iso-lines of a grid sampled at cell centers, in world coordinates.
/// `stride` subsamples the grid (1 = every cell).
std::vector<Segment> contour_segments(const Grid &values, const GridGeometry &geometry, double level, int stride = 1);

struct SvgOptions {
    double pixels = 640.0;  // size of the longer side
    int max_samples = 250;  // contour grid resolution along the longer side
    double max_speed = 2.0; // top of the trajectory color scale, m/s
};

/// Depth contours (shoreline, band edges, the depth limit, whole meters), start and goal markers,
/// and the trajectory colored by speed.
std::string render_episode_svg(const DepthMap &map, const EpisodeRecord &episode, double goal_radius,
                               const SvgOptions &options = {});

}  // namespace bathynav
