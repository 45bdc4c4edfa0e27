#include "bathynav/policy.hpp"

#include <algorithm>
#include <cmath>

namespace bathynav {

namespace {

Action steer(double desired_heading, double psi, double speed_fraction, double gain, const BodyParams &body) {
    const double err = wrap_angle(desired_heading - psi);
    const double surge = body.max_surge * speed_fraction * std::max(0.0, std::cos(err));
    const double yaw = std::clamp(gain * err, -body.max_yaw_rate, body.max_yaw_rate);
    return {surge, yaw};
}

// Central-difference gradient of the true depth field, clipped to the grid.
Vec2 true_gradient(const DepthMap &map, const Vec2 &p, double h) {
    const GridGeometry &geo = map.geometry();
    auto sample = [&](Vec2 q) {
        q.x() = std::clamp(q.x(), 0.0, geo.width());
        q.y() = std::clamp(q.y(), 0.0, geo.height());
        return map.lookup_depth(q);
    };
    return {(sample(p + Vec2(h, 0)) - sample(p - Vec2(h, 0))) / (2 * h),
            (sample(p + Vec2(0, h)) - sample(p - Vec2(0, h))) / (2 * h)};
}

}  // namespace

Action policy_privileged_gradient(const DepthMap &map, const AsvState &state, const Vec2 &goal,
                                  const GeodesicField &field, const BodyParams &body, const PrivilegedConfig &cfg) {
    const GridGeometry &geo = map.geometry();
    const Vec2 pos = state.position();
    const auto here = geo.try_cell_of(pos);
    if (!here) { return {}; }

    // Follow steepest descent of the distance field for a few cells and aim at the result.
    Vec2 target = goal;
    if (field.reachable(*here)) {
        CellIndex cur = *here;
        for (int k = 0; k < cfg.path_lookahead_cells && !(cur == field.goal()); ++k) {
            CellIndex best = cur;
            double best_d = field.distance(cur);
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const CellIndex n{cur.row + dr, cur.col + dc};
                    if ((dr == 0 && dc == 0) || !geo.in_grid(n.row, n.col)) { continue; }
                    const double d = field.distance(n);
                    if (d < best_d) {
                        best_d = d;
                        best = n;
                    }
                }
            }
            if (best == cur) { break; }
            cur = best;
        }
        if (!(cur == field.goal())) { target = geo.center(cur); }
    }

    Vec2 dir = target - pos;
    if (dir.norm() > 0.0) { dir.normalize(); }

    const double limit = map.depth_limit();
    const double depth = map.lookup_depth(pos);
    const double penalty = depth > 0.0 ? depth_penalty(depth, limit) : 1.0;
    if (penalty > 0.0) {
        Vec2 g = true_gradient(map, pos, cfg.gradient_step);
        if (g.norm() > 0.0) {
            g.normalize();
            const Vec2 push = depth >= 2.0 * limit / 3.0 ? Vec2(-g) : g;
            dir += cfg.band_push * penalty * push;
        }
    }
    if (!(dir.norm() > 0.0)) { return {}; }
    const double speed = std::max(cfg.min_speed_fraction, 1.0 - penalty);
    return steer(std::atan2(dir.y(), dir.x()), state.psi, speed, cfg.heading_gain, body);
}

Action PrivilegedPolicy::act(const PolicyInput &input) {
    if (!input.env) { throw InvalidParams("privileged policy requires map access"); }
    const Env &env = *input.env;
    return policy_privileged_gradient(env.map(), env.state(), env.goal(), env.field(), body_, cfg_);
}

Action policy_gp_heuristic(const ObservationWindow &window, const GpHeuristicConfig &cfg) {
    const int rows = window.history();
    const Observation now = window.newest();

    // Average slopes and confidences over the window to damp sensor noise.
    std::array<double, 4> slope{}, conf{};
    for (int i = 0; i < rows; ++i) {
        const Observation o = window.at(i);
        for (std::size_t m = 0; m < 4; ++m) {
            slope[m] += o.gradients[m].gradient / rows;
            conf[m] += o.gradients[m].confidence / rows;
        }
    }

    const double lo = cfg.depth_limit / 3.0, hi = 2.0 * cfg.depth_limit / 3.0, mid = 0.5 * (lo + hi);
    std::array<double, 4> projected{};
    std::array<bool, 4> exits{};
    for (std::size_t m = 0; m < 4; ++m) {
        projected[m] = now.depth + cfg.horizon * slope[m];
        exits[m] = conf[m] >= cfg.confidence_gate && (projected[m] < lo || projected[m] > hi);
    }

    const BodyParams &b = cfg.body;
    double yaw = std::clamp(cfg.heading_gain * now.target_bearing, -b.max_yaw_rate, b.max_yaw_rate);
    double surge = cfg.cruise_speed * std::max(0.0, std::cos(now.target_bearing));

    if (exits[Forward]) {
        // Turn toward whichever side projects closer to the band center.
        const bool left = std::abs(projected[Left] - mid) <= std::abs(projected[Right] - mid);
        yaw = (left ? 0.8 : -0.8) * b.max_yaw_rate;
        surge = cfg.caution_speed;
    } else {
        if (exits[Left] && !exits[Right]) { yaw = std::min(yaw, 0.0) - 0.5 * b.max_yaw_rate; }
        if (exits[Right] && !exits[Left]) { yaw = std::max(yaw, 0.0) + 0.5 * b.max_yaw_rate; }
        if (exits[Left] || exits[Right]) { surge = std::min(surge, cfg.cruise_speed); }
    }
    return Action{surge, yaw}.clamped(b);
}

Action RandomPolicy::act(const PolicyInput &) {
    std::uniform_real_distribution<double> surge(body_.min_surge, body_.max_surge);
    std::uniform_real_distribution<double> yaw(-body_.max_yaw_rate, body_.max_yaw_rate);
    const double u = surge(rng_);
    return {u, yaw(rng_)};
}

GpHeuristicConfig gp_heuristic_config(const EnvConfig &env) {
    GpHeuristicConfig cfg;
    cfg.depth_limit = env.depth_limit;
    cfg.body = env.body;
    return cfg;
}

std::unique_ptr<Policy> make_builtin_policy(const std::string &spec, const EnvConfig &env) {
    std::string name = spec;
    if (name.rfind("builtin:", 0) == 0) { name = name.substr(8); }
    if (name == "privileged") { return std::make_unique<PrivilegedPolicy>(env.body); }
    if (name == "gp_heuristic") { return std::make_unique<GpHeuristicPolicy>(gp_heuristic_config(env)); }
    if (name == "random") { return std::make_unique<RandomPolicy>(env.body); }
    throw InvalidParams("unknown builtin policy '" + spec + "'");
}

}  // namespace bathynav
