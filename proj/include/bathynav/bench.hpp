#pragma once

#include <memory>
#include <vector>

#include "bathynav/batch.hpp"

namespace bathynav {

struct BenchSettings {
    std::vector<int> batch_sizes{1, 8, 64};
    int steps = 2000;  // batch steps per repeat
    int repeats = 3;
};

struct BenchRow {
    int batch = 0;
    double steps_per_second = 0.0;  // env-steps, mean over repeats
    double steps_per_second_std = 0.0;
    double latency_us = 0.0;  // per batch_step call, mean over repeats
    double latency_us_std = 0.0;
    std::vector<double> samples;  // env-steps/s of each repeat
};

/// Times batch_step with auto-reset and the random policy choosing every action.
std::vector<BenchRow> run_bench(const std::shared_ptr<const DepthMap> &map, const EnvConfig &config,
                                const BenchSettings &settings, std::uint64_t seed, WorkerPool *pool);

}  // namespace bathynav
