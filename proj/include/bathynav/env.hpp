#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bathynav/bathy_map.hpp"
#include "bathynav/belief.hpp"
#include "bathynav/dynamics.hpp"

namespace bathynav {

struct ExtrapolationConfig {
    bool enabled = true;
    std::optional<double> step;  // Delta s; defaults to 3 cells
    double confidence = 0.5;     // alpha, must be < 1
    double min_motion = 1e-3;
};

struct RewardConfig {
    double progress_weight = 10.0;  // alpha_1
    double backward_weight = 0.5;   // alpha_2
    double depth_weight = 1.0;      // alpha_3
    double success_reward = 200.0;
    double failure_reward = -100.0;
};

struct EnvConfig {
    int history = 5;  // T
    double dt = 0.05;
    double depth_limit = 2.0;
    double goal_radius = 1.0;
    int timeout = 600;
    double discount = 0.99;  // carried for external trainers
    double min_start_goal_distance = 5.0;   // geodesic, meters
    double max_start_goal_distance = 25.0;  // geodesic, meters
    RewardConfig reward;
    SensorConfig sensor;
    KernelConfig kernel;
    BodyParams body;
    ExtrapolationConfig extrapolation;
    std::optional<double> gradient_lookahead;  // rho; defaults to one cell
    std::optional<double> prior_mean;          // defaults to L_d / 2
    std::optional<double> prior_variance;      // defaults to (L_d / 2)^2
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] double resolved_prior_mean() const { return prior_mean.value_or(depth_limit / 2.0); }
    [[nodiscard]] double resolved_prior_variance() const {
        return prior_variance.value_or((depth_limit / 2.0) * (depth_limit / 2.0));
    }
    [[nodiscard]] double resolved_lookahead(double cell_size) const { return gradient_lookahead.value_or(cell_size); }
    [[nodiscard]] double resolved_extrapolation_step(double cell_size) const {
        return extrapolation.step.value_or(3.0 * cell_size);
    }
};

/// Depth penalty: zero on [L/3, 2L/3), rising linearly to 1 at z = 0 and at z = L, capped at 1.
double depth_penalty(double z, double depth_limit);

inline constexpr int kObservationWidth = 15;

/// One timestep's features. Flattened order: r, theta, u_dot, omega_dot, prev surge command,
/// prev yaw-rate command, z, g_f, g_b, g_l, g_r, C_f, C_b, C_l, C_r.
struct Observation {
    double target_range = 0.0;
    double target_bearing = 0.0;  // counter-clockwise positive, (-pi, pi]
    double surge_accel = 0.0;
    double yaw_accel = 0.0;
    Action prev_action;
    double depth = 0.0;
    std::array<DirectionalEstimate, 4> gradients{};

    [[nodiscard]] std::array<double, kObservationWidth> flatten() const;
    static Observation unflatten(const double *row);
};

/// Stack of the last T observations, oldest first; row T-1 is the newest.
class ObservationWindow {
public:
    explicit ObservationWindow(int history = 1) : rows_(history), data_(std::size_t(history) * kObservationWidth, 0.0) {}

    /// Rebuilds a window from its flattened form (history * kObservationWidth values).
    static ObservationWindow from_flat(int history, std::vector<double> data);

    void fill(const Observation &o);
    void push(const Observation &o);

    [[nodiscard]] int history() const { return rows_; }
    [[nodiscard]] const std::vector<double> &flat() const { return data_; }
    [[nodiscard]] const double *row(int i) const { return data_.data() + std::size_t(i) * kObservationWidth; }
    [[nodiscard]] Observation newest() const { return Observation::unflatten(row(rows_ - 1)); }
    [[nodiscard]] Observation at(int i) const { return Observation::unflatten(row(i)); }

    friend bool operator==(const ObservationWindow &, const ObservationWindow &) = default;

private:
    int rows_;
    std::vector<double> data_;
};

enum class Termination : std::uint8_t { Running, Success, FailDepth, FailShore, FailTimeout, ProtocolFail };

const char *to_string(Termination t);
Termination termination_from_string(const std::string &s);
inline bool is_failure(Termination t) {
    return t == Termination::FailDepth || t == Termination::FailShore || t == Termination::FailTimeout;
}

struct StepInfo {
    Vec2 position = Vec2::Zero();
    double true_depth = 0.0;
    double progress = 0.0;       // Delta_d = dist(curr) - dist(prev)
    double backward = 0.0;       // r_back
    double depth_penalty = 0.0;  // r_depth
};

struct StepOutcome {
    ObservationWindow window;
    double reward = 0.0;
    Termination termination = Termination::Running;
    StepInfo info;
};

struct StepRecord {
    AsvState state;
    Action action;
    double depth = 0.0;
    double reward = 0.0;
    Termination termination = Termination::Running;
};

struct EpisodeRecord {
    std::string map_id;
    std::uint64_t seed = 0;
    Vec2 goal = Vec2::Zero();
    AsvState start;
    double start_depth = 0.0;
    std::vector<StepRecord> steps;
    Termination outcome = Termination::Running;
};

/// POMDP environment: true map, vehicle dynamics, SBES and GP belief.
///
/// Not thread-safe; one writer per instance. Instances share the map and the neighborhood
/// tables but nothing mutable.
class Env {
public:
    Env(EnvConfig config, std::shared_ptr<const DepthMap> map, std::string map_id = {});

    const ObservationWindow &reset(std::uint64_t seed);
    StepOutcome step(const Action &action);

    [[nodiscard]] const EnvConfig &config() const { return config_; }
    [[nodiscard]] const DepthMap &map() const { return *map_; }
    [[nodiscard]] const std::shared_ptr<const DepthMap> &map_ptr() const { return map_; }
    [[nodiscard]] const std::string &map_id() const { return map_id_; }
    [[nodiscard]] const GeodesicField &field() const { return field_; }
    [[nodiscard]] const BeliefGrid &belief() const { return belief_; }
    [[nodiscard]] const AsvState &state() const { return state_; }
    [[nodiscard]] Vec2 goal() const { return goal_; }
    [[nodiscard]] const ObservationWindow &window() const { return window_; }
    [[nodiscard]] const EpisodeRecord &record() const { return record_; }
    [[nodiscard]] Termination termination() const { return termination_; }
    [[nodiscard]] bool running() const { return started_ && termination_ == Termination::Running; }
    [[nodiscard]] int step_count() const { return steps_; }
    [[nodiscard]] std::uint64_t episode_seed() const { return episode_seed_; }
    [[nodiscard]] double last_depth() const { return reading_.depth; }

    /// Seed used by auto-reset after the current episode.
    [[nodiscard]] std::uint64_t next_episode_seed() const { return derive_seed(episode_seed_, 0x6e657874ULL); }

private:
    [[nodiscard]] Observation build_observation() const;
    void place(std::mt19937_64 &rng);

    EnvConfig config_;
    std::shared_ptr<const DepthMap> map_;
    std::string map_id_;
    BeliefGrid belief_;
    GeodesicField field_;
    std::optional<Sbes> sensor_;
    ObservationWindow window_;
    EpisodeRecord record_;

    AsvState state_;
    Vec2 goal_ = Vec2::Zero();
    Reading reading_{Vec2::Zero(), 0.0};
    double surge_accel_ = 0.0;
    double yaw_accel_ = 0.0;
    Action prev_action_;
    int steps_ = 0;
    bool started_ = false;
    Termination termination_ = Termination::Running;
    std::uint64_t episode_seed_ = 0;
};

/// Observation features for a pose against a belief; exposed for tests and external tooling.
Observation make_observation(const AsvState &state, const Vec2 &goal, double surge_accel, double yaw_accel,
                             const Action &prev_action, double depth, const BeliefGrid &belief, double lookahead);

}  // namespace bathynav
