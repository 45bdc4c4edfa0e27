#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "bathynav/env.hpp"

namespace bathynav {

/// Fixed set of worker threads running index-parallel loops. With one worker, loops run inline
/// on the calling thread.
class WorkerPool {
public:
    explicit WorkerPool(unsigned workers = default_workers());
    ~WorkerPool();
    WorkerPool(const WorkerPool &) = delete;
    WorkerPool &operator=(const WorkerPool &) = delete;

    [[nodiscard]] unsigned size() const { return unsigned(threads_.size()) + 1; }

    /// Calls fn(i) for i in [0, n). Exceptions are rethrown on the caller (first one wins).
    void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn);

    /// BATHYNAV_WORKERS if set, otherwise the hardware concurrency.
    static unsigned default_workers();

private:
    void worker_loop();

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)> *job_ = nullptr;
    std::size_t job_size_ = 0;
    std::size_t next_ = 0;
    std::size_t finished_ = 0;
    std::size_t generation_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
};

struct BatchOptions {
    bool auto_reset = false;
};

/// Steps every env with its action. Results are in input order and bit-identical to stepping
/// the envs one after another. Throws LengthMismatch on size mismatch and
/// SteppingTerminatedEpisode (before touching any env) if one is not running.
std::vector<StepOutcome> batch_step(std::span<Env *const> envs, std::span<const Action> actions,
                                    const BatchOptions &options = {}, WorkerPool *pool = nullptr);

}  // namespace bathynav
