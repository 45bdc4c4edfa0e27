#include "bathynav/protocol.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace bathynav {

Subprocess::Subprocess(const std::string &command) {
    std::signal(SIGPIPE, SIG_IGN);
    int in[2], out[2];
    if (pipe(in) != 0) { throw ProtocolError(std::string("pipe: ") + std::strerror(errno)); }
    if (pipe(out) != 0) {
        ::close(in[0]);
        ::close(in[1]);
        throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) {
        for (int fd : {in[0], in[1], out[0], out[1]}) { ::close(fd); }
        throw ProtocolError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
        dup2(in[0], STDIN_FILENO);
        dup2(out[1], STDOUT_FILENO);
        for (int fd : {in[0], in[1], out[0], out[1]}) { ::close(fd); }
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
        _exit(127);
    }
    ::close(in[0]);
    ::close(out[1]);
    to_child_ = in[1];
    from_child_ = out[0];
    fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

Subprocess::~Subprocess() { close(std::chrono::milliseconds(200)); }

void Subprocess::write_line(const std::string &line) {
    if (to_child_ < 0) { throw ProtocolError("controller stdin is closed"); }
    std::string data = line + '\n';
    const char *p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        const ssize_t n = ::write(to_child_, p, left);
        if (n < 0) {
            if (errno == EINTR) { continue; }
            throw ProtocolError(std::string("write to controller failed: ") + std::strerror(errno));
        }
        p += n;
        left -= std::size_t(n);
    }
}

std::optional<std::string> Subprocess::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) { return std::nullopt; }
        pollfd pfd{from_child_, POLLIN, 0};
        const int r = poll(&pfd, 1, int(left.count()));
        if (r < 0) {
            if (errno == EINTR) { continue; }
            throw ProtocolError(std::string("poll failed: ") + std::strerror(errno));
        }
        if (r == 0) { return std::nullopt; }
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) { continue; }
            throw ProtocolError(std::string("read from controller failed: ") + std::strerror(errno));
        }
        if (n == 0) { throw ProtocolError("controller closed its output"); }
        buffer_.append(chunk, std::size_t(n));
    }
}

void Subprocess::close(std::chrono::milliseconds grace) {
    if (to_child_ >= 0) { ::close(to_child_); }
    if (from_child_ >= 0) { ::close(from_child_); }
    to_child_ = from_child_ = -1;
    if (pid_ <= 0) { return; }
    const auto deadline = std::chrono::steady_clock::now() + grace;
    int status = 0;
    while (waitpid(pid_, &status, WNOHANG) == 0) {
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid_, SIGKILL);
            waitpid(pid_, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    pid_ = -1;
}

json hello_record(const EnvConfig &config) {
    return {{"type", "hello"},
            {"protocol", 1},
            {"config", to_json(config)},
            {"history", config.history},
            {"observation_width", kObservationWidth}};
}

json step_record(const std::string &episode_id, int step, const ObservationWindow &window, double reward,
                 Termination termination, const StepInfo &info) {
    return {{"type", "step"},
            {"episode_id", episode_id},
            {"step", step},
            {"obs", window.flat()},
            {"reward", reward},
            {"done", termination != Termination::Running},
            {"info",
             {{"termination", to_string(termination)},
              {"x", info.position.x()},
              {"y", info.position.y()},
              {"true_depth", info.true_depth},
              {"progress", info.progress},
              {"backward", info.backward},
              {"depth_penalty", info.depth_penalty}}}};
}

Action parse_reply(const std::string &line, const std::string &episode_id) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception &) {
        throw ProtocolError("malformed controller reply");
    }
    if (!j.is_object()) { throw ProtocolError("controller reply is not an object"); }
    const auto id = j.find("episode_id");
    if (id == j.end() || !id->is_string() || id->get<std::string>() != episode_id) {
        throw ProtocolError("controller reply has the wrong episode_id");
    }
    const auto a = j.find("action");
    if (a == j.end() || !a->is_array() || a->size() != 2 || !(*a)[0].is_number() || !(*a)[1].is_number()) {
        throw ProtocolError("controller reply needs action: [u, omega]");
    }
    const Action act{(*a)[0].get<double>(), (*a)[1].get<double>()};
    if (!std::isfinite(act.surge) || !std::isfinite(act.yaw_rate)) { throw ProtocolError("non-finite action"); }
    return act;
}

ExternalAgent::ExternalAgent(std::string command, EnvConfig config, std::chrono::milliseconds timeout)
    : command_(std::move(command)), config_(std::move(config)), timeout_(timeout) {}

ExternalAgent::~ExternalAgent() {
    if (process_) {
        try {
            process_->write_line(json{{"type", "bye"}}.dump());
        } catch (const ProtocolError &) {}
        process_->close();
    }
}

void ExternalAgent::ensure_started() {
    if (process_) { return; }
    process_ = std::make_unique<Subprocess>(command_);
    process_->write_line(hello_record(config_).dump());
}

void ExternalAgent::drive(Env &env, const std::string &episode_id) {
    process_->write_line(step_record(episode_id, 0, env.window(), 0.0, Termination::Running, StepInfo{}).dump());
    while (env.running()) {
        const auto line = process_->read_line(timeout_);
        if (!line) { throw ProtocolError("controller timed out"); }
        const Action a = parse_reply(*line, episode_id);
        const StepOutcome out = env.step(a);
        process_->write_line(step_record(episode_id, env.step_count(), out.window, out.reward, out.termination, out.info).dump());
    }
}

EpisodeRecord ExternalAgent::run_episode(Env &env, std::uint64_t seed, const std::string &episode_id) {
    env.reset(seed);
    try {
        ensure_started();
        drive(env, episode_id);
        return env.record();
    } catch (const ProtocolError &) {
        process_.reset();
        EpisodeRecord r = env.record();
        r.outcome = Termination::ProtocolFail;
        return r;
    }
}

}  // namespace bathynav
