#include "bathynav/metrics.hpp"

#include <cmath>

namespace bathynav {

MetricSet compute_metrics(std::span<const EpisodeRecord> episodes, int timeout) {
    MetricSet m;
    double efficiency_sum = 0.0, surge_sum = 0.0, heading_sum = 0.0;
    for (const EpisodeRecord &ep : episodes) {
        if (ep.outcome == Termination::ProtocolFail) {
            ++m.protocol_failures;
            continue;
        }
        if (ep.outcome == Termination::Running) { throw InvalidParams("episode record has not terminated"); }
        ++m.episodes;
        const auto length = ep.steps.size();
        switch (ep.outcome) {
            case Termination::Success:
                ++m.successes;
                efficiency_sum += 1.0 - double(length - 1) / double(timeout);
                break;
            case Termination::FailDepth:
            case Termination::FailShore: ++m.depth_breaks; break;
            case Termination::FailTimeout: ++m.timeouts; break;
            default: break;
        }
        const AsvState *prev = &ep.start;
        for (const StepRecord &s : ep.steps) {
            surge_sum += std::abs(s.state.u - prev->u);
            heading_sum += std::abs(wrap_angle(s.state.psi - prev->psi));
            prev = &s.state;
        }
        m.transitions += length;
    }
    if (m.episodes > 0) {
        const double n = double(m.episodes);
        m.success_rate = double(m.successes) / n;
        m.efficiency = efficiency_sum / n;
        m.depth_break_rate = double(m.depth_breaks) / n;
        m.timeout_rate = double(m.timeouts) / n;
    }
    if (m.transitions > 0) {
        m.velocity_smoothness = surge_sum / double(m.transitions);
        m.heading_smoothness = heading_sum / double(m.transitions);
    }
    return m;
}

namespace {

MetricStat stat(const std::vector<ReportRow> &rows, double MetricSet::*field) {
    MetricStat s;
    if (rows.empty()) { return s; }
    for (const auto &r : rows) { s.mean += r.metrics.*field; }
    s.mean /= double(rows.size());
    double var = 0.0;
    for (const auto &r : rows) { var += (r.metrics.*field - s.mean) * (r.metrics.*field - s.mean); }
    s.std = std::sqrt(var / double(rows.size()));
    return s;
}

}  // namespace

MetricsReport build_report(const std::string &policy, int timeout, std::span<const std::uint64_t> seeds,
                           std::span<const std::string> map_ids,
                           const std::function<std::span<const EpisodeRecord>(std::size_t, std::size_t)> &group) {
    MetricsReport rep;
    rep.policy = policy;
    rep.timeout = timeout;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        std::vector<EpisodeRecord> pooled;
        for (std::size_t m = 0; m < map_ids.size(); ++m) {
            const auto eps = group(s, m);
            rep.map_rows.push_back({map_ids[m], seeds[s], compute_metrics(eps, timeout)});
            pooled.insert(pooled.end(), eps.begin(), eps.end());
        }
        rep.seed_rows.push_back({"*", seeds[s], compute_metrics(pooled, timeout)});
        rep.protocol_failures += rep.seed_rows.back().metrics.protocol_failures;
    }
    rep.success_rate = stat(rep.seed_rows, &MetricSet::success_rate);
    rep.efficiency = stat(rep.seed_rows, &MetricSet::efficiency);
    rep.depth_break_rate = stat(rep.seed_rows, &MetricSet::depth_break_rate);
    rep.timeout_rate = stat(rep.seed_rows, &MetricSet::timeout_rate);
    rep.velocity_smoothness = stat(rep.seed_rows, &MetricSet::velocity_smoothness);
    rep.heading_smoothness = stat(rep.seed_rows, &MetricSet::heading_smoothness);
    return rep;
}

EpisodeRecord run_policy_episode(Env &env, Policy &policy, std::uint64_t seed) {
    policy.begin_episode(seed);
    env.reset(seed);
    const Env *view = policy.privilege() == Privilege::TrueMap ? &env : nullptr;
    while (env.running()) {
        const Action a = policy.act(PolicyInput{env.window(), view});
        env.step(a);
    }
    return env.record();
}

AgentFactory policy_agent_factory(const Policy &prototype) {
    std::shared_ptr<const Policy> proto = prototype.clone();
    return [proto] { return std::make_unique<PolicyAgent>(proto->clone()); };
}

std::string episode_id(const std::string &map_id, std::uint64_t seed, std::size_t episode) {
    return map_id + ":" + std::to_string(seed) + ":" + std::to_string(episode);
}

EvalResult evaluate(const AgentFactory &agents, std::span<const MapEntry> maps, const EnvConfig &config,
                    const EvalOptions &options, WorkerPool *pool) {
    if (maps.empty()) { throw InvalidParams("evaluate: no maps"); }
    if (options.seeds.empty()) { throw InvalidParams("evaluate: no seeds"); }
    if (options.episodes_per_map < 1) { throw InvalidParams("evaluate: episodes per map must be >= 1"); }
    config.validate();

    const std::size_t per_map = std::size_t(options.episodes_per_map);
    const std::size_t per_seed = per_map * maps.size();
    const std::size_t total = per_seed * options.seeds.size();
    std::vector<EpisodeRecord> records(total);

    // Contiguous chunks, one agent per chunk; each episode depends only on its own seed.
    const std::size_t chunks = std::min<std::size_t>(pool ? pool->size() : 1, total);
    std::vector<std::string> names(chunks);
    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * total / chunks, end = (c + 1) * total / chunks;
        auto agent = agents();
        names[c] = agent->name();
        std::unique_ptr<Env> env;
        std::size_t env_map = maps.size();
        for (std::size_t t = begin; t < end; ++t) {
            const std::size_t s = t / per_seed, m = (t % per_seed) / per_map, e = t % per_map;
            if (!env || env_map != m) {
                env = std::make_unique<Env>(config, maps[m].map, maps[m].id);
                env_map = m;
            }
            records[t] = agent->run_episode(*env, episode_seed(options.seeds[s], m, e),
                                            episode_id(maps[m].id, options.seeds[s], e));
        }
    };
    if (pool) {
        pool->parallel_for(chunks, run_chunk);
    } else {
        for (std::size_t c = 0; c < chunks; ++c) { run_chunk(c); }
    }

    std::vector<std::string> ids;
    for (const auto &m : maps) { ids.push_back(m.id); }
    EvalResult out;
    out.report = build_report(names.front(), config.timeout, options.seeds, ids, [&](std::size_t s, std::size_t m) {
        return std::span<const EpisodeRecord>(records.data() + s * per_seed + m * per_map, per_map);
    });
    if (options.keep_records) { out.records = std::move(records); }
    return out;
}

}  // namespace bathynav
