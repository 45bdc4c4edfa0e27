#include "bathynav/bench.hpp"

#include <chrono>
#include <cmath>

#include "bathynav/policy.hpp"

namespace bathynav {

namespace {

void mean_std(const std::vector<double> &xs, double &mean, double &std) {
    mean = 0.0;
    for (double x : xs) { mean += x; }
    mean /= double(xs.size());
    double var = 0.0;
    for (double x : xs) { var += (x - mean) * (x - mean); }
    std = std::sqrt(var / double(xs.size()));
}

}  // namespace

std::vector<BenchRow> run_bench(const std::shared_ptr<const DepthMap> &map, const EnvConfig &config,
                                const BenchSettings &settings, std::uint64_t seed, WorkerPool *pool) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> rows;
    for (int batch : settings.batch_sizes) {
        std::vector<std::unique_ptr<Env>> owned;
        std::vector<Env *> envs;
        std::vector<RandomPolicy> policies;
        for (int i = 0; i < batch; ++i) {
            owned.push_back(std::make_unique<Env>(config, map, "bench"));
            envs.push_back(owned.back().get());
            envs.back()->reset(derive_seed(seed, std::uint64_t(batch), std::uint64_t(i)));
            policies.emplace_back(config.body);
            policies.back().begin_episode(derive_seed(seed, std::uint64_t(i)));
        }
        std::vector<Action> actions(static_cast<std::size_t>(batch));
        const BatchOptions options{true};
        auto tick = [&] {
            for (std::size_t i = 0; i < actions.size(); ++i) { actions[i] = policies[i].act({envs[i]->window()}); }
            batch_step(envs, actions, options, pool);
        };
        for (int k = 0; k < std::min(50, settings.steps); ++k) { tick(); }

        BenchRow row;
        row.batch = batch;
        std::vector<double> latency;
        for (int rep = 0; rep < settings.repeats; ++rep) {
            const auto t0 = clock::now();
            for (int k = 0; k < settings.steps; ++k) { tick(); }
            const double secs = std::chrono::duration<double>(clock::now() - t0).count();
            row.samples.push_back(double(batch) * settings.steps / secs);
            latency.push_back(1e6 * secs / settings.steps);
        }
        mean_std(row.samples, row.steps_per_second, row.steps_per_second_std);
        mean_std(latency, row.latency_us, row.latency_us_std);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace bathynav
