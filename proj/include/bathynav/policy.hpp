#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "bathynav/env.hpp"

namespace bathynav {

enum class Privilege { ObservationOnly, TrueMap };

/// What a policy sees at one decision. `env` is set only for policies that declare TrueMap.
struct PolicyInput {
    const ObservationWindow &window;
    const Env *env = nullptr;
};

class Policy {
public:
    virtual ~Policy() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual Privilege privilege() const { return Privilege::ObservationOnly; }
    virtual void begin_episode(std::uint64_t /*seed*/) {}
    virtual Action act(const PolicyInput &input) = 0;
    [[nodiscard]] virtual std::unique_ptr<Policy> clone() const = 0;
};

struct PrivilegedConfig {
    int path_lookahead_cells = 15;  // how far along the descent path to aim
    double heading_gain = 2.0;
    double band_push = 1.5;         // weight of the true-gradient push back toward the band center
    double gradient_step = 0.5;     // meters, central-difference half width
    double min_speed_fraction = 0.2;
};

/// Descends the geodesic distance field with full map access and slows near the band edges.
Action policy_privileged_gradient(const DepthMap &map, const AsvState &state, const Vec2 &goal,
                                  const GeodesicField &field, const BodyParams &body, const PrivilegedConfig &cfg = {});

struct GpHeuristicConfig {
    double depth_limit = 2.0;
    double horizon = 1.0;          // meters ahead used to project z + horizon * g
    double confidence_gate = 0.3;
    double cruise_speed = 1.0;
    double caution_speed = 0.4;
    double heading_gain = 1.5;
    BodyParams body;
};

/// Unprivileged baseline: steer to the target bearing, turn away from any direction whose
/// projected depth leaves the band [L/3, 2L/3] with enough confidence.
Action policy_gp_heuristic(const ObservationWindow &window, const GpHeuristicConfig &cfg);

class PrivilegedPolicy final : public Policy {
public:
    PrivilegedPolicy(BodyParams body, PrivilegedConfig cfg = {}) : body_(body), cfg_(cfg) {}
    [[nodiscard]] std::string name() const override { return "privileged"; }
    [[nodiscard]] Privilege privilege() const override { return Privilege::TrueMap; }
    Action act(const PolicyInput &input) override;
    [[nodiscard]] std::unique_ptr<Policy> clone() const override { return std::make_unique<PrivilegedPolicy>(*this); }

private:
    BodyParams body_;
    PrivilegedConfig cfg_;
};

class GpHeuristicPolicy final : public Policy {
public:
    explicit GpHeuristicPolicy(GpHeuristicConfig cfg) : cfg_(cfg) {}
    [[nodiscard]] std::string name() const override { return "gp_heuristic"; }
    Action act(const PolicyInput &input) override { return policy_gp_heuristic(input.window, cfg_); }
    [[nodiscard]] std::unique_ptr<Policy> clone() const override { return std::make_unique<GpHeuristicPolicy>(*this); }

private:
    GpHeuristicConfig cfg_;
};

/// Uniform actions within the kinematic limits, reseeded per episode.
class RandomPolicy final : public Policy {
public:
    explicit RandomPolicy(BodyParams body) : body_(body) {}
    [[nodiscard]] std::string name() const override { return "random"; }
    void begin_episode(std::uint64_t seed) override { rng_.seed(derive_seed(seed, 0x72616e64ULL)); }
    Action act(const PolicyInput &input) override;
    [[nodiscard]] std::unique_ptr<Policy> clone() const override { return std::make_unique<RandomPolicy>(*this); }

private:
    BodyParams body_;
    std::mt19937_64 rng_{0};
};

GpHeuristicConfig gp_heuristic_config(const EnvConfig &env);

/// builtin:privileged | builtin:gp_heuristic | builtin:random (the "builtin:" prefix is optional).
std::unique_ptr<Policy> make_builtin_policy(const std::string &spec, const EnvConfig &env);

}  // namespace bathynav
