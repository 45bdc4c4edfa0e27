#include "bathynav/env.hpp"

#include <algorithm>
#include <cmath>

namespace bathynav {

void EnvConfig::validate() const {
    if (history < 1) { throw InvalidParams("history must be >= 1"); }
    if (timeout < 1) { throw InvalidParams("timeout must be >= 1"); }
    if (!(goal_radius > 0.0)) { throw InvalidParams("goal radius must be positive"); }
    if (!(dt > 0.0)) { throw InvalidParams("dt must be positive"); }
    if (!(depth_limit > 0.0)) { throw InvalidParams("depth limit must be positive"); }
    if (!(discount >= 0.0 && discount < 1.0)) { throw InvalidParams("discount must lie in [0, 1)"); }
    if (reward.progress_weight < 0.0 || reward.backward_weight < 0.0 || reward.depth_weight < 0.0) {
        throw InvalidParams("reward weights must be non-negative");
    }
    if (min_start_goal_distance < 0.0 || max_start_goal_distance < min_start_goal_distance) {
        throw InvalidParams("start/goal distance bounds are inconsistent");
    }
    if (!(extrapolation.confidence > 0.0 && extrapolation.confidence < 1.0)) {
        throw InvalidParams("extrapolation confidence must lie in (0, 1)");
    }
    if (extrapolation.step && !(*extrapolation.step > 0.0)) { throw InvalidParams("extrapolation step must be positive"); }
    if (gradient_lookahead && !(*gradient_lookahead > 0.0)) { throw InvalidParams("gradient lookahead must be positive"); }
    sensor.validate();
    kernel.validate();
    body.validate();
    if (!(resolved_prior_variance() > 0.0)) { throw InvalidParams("prior variance must be positive"); }
}

double depth_penalty(double z, double depth_limit) {
    if (z < 0.0) { throw NegativeDepth("depth reading is negative"); }
    const double lo = depth_limit / 3.0, hi = 2.0 * depth_limit / 3.0;
    const double slope = 3.0 / depth_limit;
    if (z < lo) { return std::min(1.0, slope * (lo - z)); }
    if (z < hi) { return 0.0; }
    return std::min(1.0, slope * (z - hi));
}

std::array<double, kObservationWidth> Observation::flatten() const {
    return {target_range, target_bearing, surge_accel, yaw_accel, prev_action.surge, prev_action.yaw_rate, depth,
            gradients[Forward].gradient, gradients[Backward].gradient, gradients[Left].gradient, gradients[Right].gradient,
            gradients[Forward].confidence, gradients[Backward].confidence, gradients[Left].confidence,
            gradients[Right].confidence};
}

Observation Observation::unflatten(const double *row) {
    Observation o;
    o.target_range = row[0];
    o.target_bearing = row[1];
    o.surge_accel = row[2];
    o.yaw_accel = row[3];
    o.prev_action = {row[4], row[5]};
    o.depth = row[6];
    for (int m = 0; m < 4; ++m) { o.gradients[std::size_t(m)] = {row[7 + m], row[11 + m]}; }
    return o;
}

ObservationWindow ObservationWindow::from_flat(int history, std::vector<double> data) {
    if (history < 1 || data.size() != std::size_t(history) * kObservationWidth) {
        throw LengthMismatch("observation window has the wrong number of values");
    }
    ObservationWindow w(history);
    w.data_ = std::move(data);
    return w;
}

void ObservationWindow::fill(const Observation &o) {
    const auto f = o.flatten();
    for (int r = 0; r < rows_; ++r) { std::copy(f.begin(), f.end(), data_.begin() + std::ptrdiff_t(r) * kObservationWidth); }
}

void ObservationWindow::push(const Observation &o) {
    std::copy(data_.begin() + kObservationWidth, data_.end(), data_.begin());
    const auto f = o.flatten();
    std::copy(f.begin(), f.end(), data_.end() - kObservationWidth);
}

const char *to_string(Termination t) {
    switch (t) {
        case Termination::Running: return "running";
        case Termination::Success: return "success";
        case Termination::FailDepth: return "fail_depth";
        case Termination::FailShore: return "fail_shore";
        case Termination::FailTimeout: return "fail_timeout";
        case Termination::ProtocolFail: return "protocol_fail";
    }
    return "unknown";
}

Termination termination_from_string(const std::string &s) {
    for (auto t : {Termination::Running, Termination::Success, Termination::FailDepth, Termination::FailShore,
                   Termination::FailTimeout, Termination::ProtocolFail}) {
        if (s == to_string(t)) { return t; }
    }
    throw FormatError("unknown termination '" + s + "'");
}

Observation make_observation(const AsvState &state, const Vec2 &goal, double surge_accel, double yaw_accel,
                             const Action &prev_action, double depth, const BeliefGrid &belief, double lookahead) {
    Observation o;
    const Vec2 to_goal = goal - state.position();
    o.target_range = to_goal.norm();
    o.target_bearing = o.target_range > 0.0 ? wrap_angle(std::atan2(to_goal.y(), to_goal.x()) - state.psi) : 0.0;
    o.surge_accel = surge_accel;
    o.yaw_accel = yaw_accel;
    o.prev_action = prev_action;
    o.depth = depth;
    o.gradients = directional_gradients(belief, state.position(), state.psi, depth, lookahead);
    return o;
}

Env::Env(EnvConfig config, std::shared_ptr<const DepthMap> map, std::string map_id)
    : config_(std::move(config)),
      map_(std::move(map)),
      map_id_(std::move(map_id)),
      belief_((config_.validate(), map_->geometry()), config_.kernel, config_.resolved_prior_mean(),
              config_.resolved_prior_variance()),
      window_(config_.history) {}

void Env::place(std::mt19937_64 &rng) {
    const DepthMap &map = *map_;
    const GridGeometry &geo = map.geometry();
    const double margin = map.params().target_margin;
    std::uniform_int_distribution<int> row_dist(0, geo.rows - 1), col_dist(0, geo.cols - 1);

    auto admissible = [&](const CellIndex &c) {
        return map.is_safe(c) && (margin <= 0.0 || map.clearance(c, margin) >= margin);
    };

    constexpr int max_attempts = 1000;
    constexpr int starts_per_goal = 200;
    int attempts = 0;
    while (attempts < max_attempts) {
        const CellIndex goal{row_dist(rng), col_dist(rng)};
        ++attempts;
        if (!admissible(goal)) { continue; }
        field_ = geodesic_field(map, goal);
        for (int k = 0; k < starts_per_goal && attempts < max_attempts; ++k, ++attempts) {
            const CellIndex start{row_dist(rng), col_dist(rng)};
            if (!field_.reachable(start) || !admissible(start)) { continue; }
            const double d = field_.distance(start);
            if (d < config_.min_start_goal_distance || d > config_.max_start_goal_distance) { continue; }
            goal_ = geo.center(goal);
            const Vec2 p = geo.center(start);
            std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
            state_ = AsvState{p.x(), p.y(), wrap_angle(heading(rng)), 0.0, 0.0, 0.0};
            return;
        }
    }
    throw NoValidPlacement("no admissible start/goal pair after 1000 attempts");
}

const ObservationWindow &Env::reset(std::uint64_t seed) {
    episode_seed_ = seed;
    std::mt19937_64 rng(derive_seed(seed, 0x706c616365ULL));
    place(rng);
    sensor_.emplace(config_.sensor.noise_variance, derive_seed(seed, 0x736265ULL));

    belief_.reset();
    reading_ = {state_.position(), sensor_->measure(*map_, state_.position())};
    belief_.update(reading_.position, reading_.depth, config_.sensor.noise_variance);

    surge_accel_ = 0.0;
    yaw_accel_ = 0.0;
    prev_action_ = {};
    steps_ = 0;
    started_ = true;
    termination_ = Termination::Running;

    window_ = ObservationWindow(config_.history);
    window_.fill(build_observation());

    record_ = EpisodeRecord{};
    record_.map_id = map_id_;
    record_.seed = seed;
    record_.goal = goal_;
    record_.start = state_;
    record_.start_depth = reading_.depth;
    record_.steps.reserve(std::size_t(config_.timeout));
    return window_;
}

Observation Env::build_observation() const {
    return make_observation(state_, goal_, surge_accel_, yaw_accel_, prev_action_, reading_.depth, belief_,
                            config_.resolved_lookahead(map_->cell_size()));
}

StepOutcome Env::step(const Action &action) {
    if (!started_ || termination_ != Termination::Running) {
        throw SteppingTerminatedEpisode("step() called on an episode that is not running");
    }
    const DepthMap &map = *map_;
    const GridGeometry &geo = map.geometry();
    const Action cmd = action.clamped(config_.body);

    const auto prev_cell = geo.cell_of(state_.position());
    const auto res = bathynav::step(state_, cmd, config_.dt, config_.body);
    state_ = res.state;
    surge_accel_ = res.surge_accel;
    yaw_accel_ = res.yaw_accel;
    prev_action_ = cmd;
    ++steps_;

    StepOutcome out;
    out.info.position = state_.position();
    const auto cell = geo.try_cell_of(state_.position());

    Termination term = Termination::Running;
    if ((state_.position() - goal_).norm() <= config_.goal_radius) {
        term = Termination::Success;
    } else if (!cell) {
        term = Termination::FailShore;
    } else if (map.classify(*cell) == CellClass::DeepUnsafe) {
        term = Termination::FailDepth;
    } else if (map.classify(*cell) == CellClass::Shoreline) {
        term = Termination::FailShore;
    } else if (steps_ >= config_.timeout) {
        term = Termination::FailTimeout;
    }

    if (cell) {
        out.info.true_depth = map.depth(*cell);
        const Reading prev = reading_;
        reading_ = {state_.position(), sensor_->measure(map, state_.position())};

        std::array<BeliefUpdate, 2> updates{BeliefUpdate{reading_.position, reading_.depth, 1.0, true}, BeliefUpdate{}};
        std::size_t count = 1;
        const auto &ex = config_.extrapolation;
        if (ex.enabled && (reading_.position - prev.position).norm() > ex.min_motion) {
            const auto pseudo = extrapolate(prev, reading_, config_.resolved_extrapolation_step(geo.cell_size),
                                            ex.confidence, map.params().max_depth, ex.min_motion);
            if (geo.contains(pseudo.position)) {
                updates[1] = {pseudo.position, pseudo.depth, pseudo.confidence, false};
                count = 2;
            }
        }
        belief_.update(std::span<const BeliefUpdate>(updates.data(), count), config_.sensor.noise_variance);
    }

    const RewardConfig &rw = config_.reward;
    out.info.backward = std::abs(std::min(cmd.surge, 0.0));
    out.info.depth_penalty = depth_penalty(std::max(reading_.depth, 0.0), config_.depth_limit);
    if (cell && field_.reachable(*cell)) {
        out.info.progress = field_.distance(*cell) - field_.distance(prev_cell);
    }
    switch (term) {
        case Termination::Success: out.reward = rw.success_reward; break;
        case Termination::Running:
            out.reward = -rw.progress_weight * out.info.progress - rw.backward_weight * out.info.backward -
                         rw.depth_weight * out.info.depth_penalty;
            break;
        default: out.reward = rw.failure_reward; break;
    }
    termination_ = term;
    out.termination = term;

    window_.push(build_observation());
    out.window = window_;

    record_.steps.push_back({state_, cmd, reading_.depth, out.reward, term});
    if (term != Termination::Running) { record_.outcome = term; }
    return out;
}

}  // namespace bathynav
