#include "bathynav/batch.hpp"

#include <cstdlib>
#include <string>

namespace bathynav {

unsigned WorkerPool::default_workers() {
    if (const char *env = std::getenv("BATHYNAV_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) { return unsigned(n); }
        } catch (const std::exception &) {}
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

WorkerPool::WorkerPool(unsigned workers) {
    for (unsigned i = 1; i < std::max(1u, workers); ++i) { threads_.emplace_back([this] { worker_loop(); }); }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto &t : threads_) { t.join(); }
}

void WorkerPool::worker_loop() {
    std::size_t seen = 0;
    std::unique_lock lock(mutex_);
    while (true) {
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) { return; }
        seen = generation_;
        while (next_ < job_size_) {
            const std::size_t i = next_++;
            lock.unlock();
            try {
                (*job_)(i);
            } catch (...) {
                lock.lock();
                if (!error_) { error_ = std::current_exception(); }
                lock.unlock();
            }
            lock.lock();
            if (++finished_ == job_size_) { done_.notify_all(); }
        }
    }
}

void WorkerPool::parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn) {
    if (n == 0) { return; }
    if (threads_.empty() || n == 1) {
        for (std::size_t i = 0; i < n; ++i) { fn(i); }
        return;
    }
    std::unique_lock lock(mutex_);
    job_ = &fn;
    job_size_ = n;
    next_ = 0;
    finished_ = 0;
    error_ = nullptr;
    ++generation_;
    wake_.notify_all();
    // The caller works too.
    while (next_ < job_size_) {
        const std::size_t i = next_++;
        lock.unlock();
        try {
            fn(i);
        } catch (...) {
            lock.lock();
            if (!error_) { error_ = std::current_exception(); }
            lock.unlock();
        }
        lock.lock();
        ++finished_;
    }
    done_.wait(lock, [&] { return finished_ == job_size_; });
    job_ = nullptr;
    job_size_ = 0;
    if (error_) {
        auto e = error_;
        error_ = nullptr;
        std::rethrow_exception(e);
    }
}

std::vector<StepOutcome> batch_step(std::span<Env *const> envs, std::span<const Action> actions,
                                    const BatchOptions &options, WorkerPool *pool) {
    if (envs.size() != actions.size()) { throw LengthMismatch("batch_step: envs and actions differ in length"); }
    for (std::size_t i = 0; i < envs.size(); ++i) {
        if (!envs[i]->running()) {
            throw SteppingTerminatedEpisode("batch_step: env " + std::to_string(i) + " is not running");
        }
    }
    std::vector<StepOutcome> out(envs.size());
    auto work = [&](std::size_t i) {
        Env &env = *envs[i];
        out[i] = env.step(actions[i]);
        if (options.auto_reset && !env.running()) { env.reset(env.next_episode_seed()); }
    };
    if (pool) {
        pool->parallel_for(envs.size(), work);
    } else {
        for (std::size_t i = 0; i < envs.size(); ++i) { work(i); }
    }
    return out;
}

}  // namespace bathynav
