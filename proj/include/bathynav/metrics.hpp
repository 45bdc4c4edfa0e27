#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bathynav/batch.hpp"
#include "bathynav/env.hpp"
#include "bathynav/policy.hpp"

namespace bathynav {

/// Metrics over a set of episodes. Protocol-fail episodes are counted but excluded from every
/// rate and average.
struct MetricSet {
    std::size_t episodes = 0;  // terminated episodes, protocol failures excluded
    std::size_t successes = 0;
    std::size_t depth_breaks = 0;  // fail_depth + fail_shore
    std::size_t timeouts = 0;
    std::size_t protocol_failures = 0;
    std::size_t transitions = 0;

    double success_rate = 0.0;        // SR
    double efficiency = 0.0;          // ES, mean of success * (1 - (length - 1) / timeout)
    double depth_break_rate = 0.0;    // MDB
    double timeout_rate = 0.0;
    double velocity_smoothness = 0.0; // VS, mean |u_{t+1} - u_t| per step
    double heading_smoothness = 0.0;  // HS, mean |wrap(psi_{t+1} - psi_t)| per step
};

MetricSet compute_metrics(std::span<const EpisodeRecord> episodes, int timeout);

struct MetricStat {
    double mean = 0.0;
    double std = 0.0;  // population std across seeds
};

struct ReportRow {
    std::string map_id;  // "*" for a row pooled over all maps
    std::uint64_t seed = 0;
    MetricSet metrics;
};

struct MetricsReport {
    std::string policy;
    int timeout = 0;
    std::vector<ReportRow> map_rows;   // one per (map, seed)
    std::vector<ReportRow> seed_rows;  // one per seed, pooled over maps
    MetricStat success_rate, efficiency, depth_break_rate, timeout_rate, velocity_smoothness, heading_smoothness;
    std::size_t protocol_failures = 0;
};

/// Rebuilds the full report from episode records grouped by (seed, map).
MetricsReport build_report(const std::string &policy, int timeout, std::span<const std::uint64_t> seeds,
                           std::span<const std::string> map_ids,
                           const std::function<std::span<const EpisodeRecord>(std::size_t seed, std::size_t map)> &group);

/// Drives whole episodes on an env. Built-in policies and external controllers both implement this.
class Agent {
public:
    virtual ~Agent() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    virtual EpisodeRecord run_episode(Env &env, std::uint64_t seed, const std::string &episode_id) = 0;
};

using AgentFactory = std::function<std::unique_ptr<Agent>()>;

EpisodeRecord run_policy_episode(Env &env, Policy &policy, std::uint64_t seed);

class PolicyAgent final : public Agent {
public:
    explicit PolicyAgent(std::unique_ptr<Policy> policy) : policy_(std::move(policy)) {}
    [[nodiscard]] std::string name() const override { return policy_->name(); }
    EpisodeRecord run_episode(Env &env, std::uint64_t seed, const std::string &) override {
        return run_policy_episode(env, *policy_, seed);
    }

private:
    std::unique_ptr<Policy> policy_;
};

AgentFactory policy_agent_factory(const Policy &prototype);

struct MapEntry {
    std::string id;
    std::shared_ptr<const DepthMap> map;
};

struct EvalOptions {
    int episodes_per_map = 10;
    std::vector<std::uint64_t> seeds{0};
    bool keep_records = false;
};

struct EvalResult {
    MetricsReport report;
    std::vector<EpisodeRecord> records;  // ordered by (seed, map, episode); empty unless kept
};

/// Seed for episode `episode` on map `map_index` under evaluation seed `seed`.
inline std::uint64_t episode_seed(std::uint64_t seed, std::size_t map_index, std::size_t episode) {
    return derive_seed(seed, map_index, episode);
}

std::string episode_id(const std::string &map_id, std::uint64_t seed, std::size_t episode);

/// Runs every (seed, map, episode) triple. The result does not depend on the worker count.
EvalResult evaluate(const AgentFactory &agents, std::span<const MapEntry> maps, const EnvConfig &config,
                    const EvalOptions &options, WorkerPool *pool = nullptr);

}  // namespace bathynav
