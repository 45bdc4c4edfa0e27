#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "bathynav/io.hpp"
#include "bathynav/metrics.hpp"

namespace bathynav {

/// Line-oriented pipe pair to a child process started with /bin/sh -c.
class Subprocess {
public:
    explicit Subprocess(const std::string &command);
    ~Subprocess();
    Subprocess(const Subprocess &) = delete;
    Subprocess &operator=(const Subprocess &) = delete;

    /// Throws ProtocolError if the child is gone.
    void write_line(const std::string &line);
    /// nullopt on timeout; throws ProtocolError on EOF.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout);
    /// Closes the child's stdin and reaps it, killing it after `grace`.
    void close(std::chrono::milliseconds grace = std::chrono::milliseconds(500));

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// Engine side of the stdio protocol.
///   engine -> controller: {"type":"hello", "protocol":1, "config":{...}, "history":T, "observation_width":15}
///   engine -> controller: {"type":"step", "episode_id", "step", "obs":[15*T], "reward", "done", "info":{...}}
///   controller -> engine: {"episode_id", "action":[u_cmd, omega_cmd]}   (only after records with done=false)
///   engine -> controller: {"type":"bye"} before closing
json hello_record(const EnvConfig &config);
json step_record(const std::string &episode_id, int step, const ObservationWindow &window, double reward,
                 Termination termination, const StepInfo &info);
/// Validates a controller reply and returns its action; throws ProtocolError.
Action parse_reply(const std::string &line, const std::string &episode_id);

/// Runs episodes against an external controller process. A protocol violation (malformed
/// reply, wrong episode id, timeout, dead process) aborts the episode as protocol_fail and the
/// process is restarted for the next episode.
class ExternalAgent final : public Agent {
public:
    ExternalAgent(std::string command, EnvConfig config, std::chrono::milliseconds timeout = std::chrono::seconds(1));
    ~ExternalAgent() override;

    [[nodiscard]] std::string name() const override { return "extern:" + command_; }
    EpisodeRecord run_episode(Env &env, std::uint64_t seed, const std::string &episode_id) override;

private:
    void ensure_started();
    void drive(Env &env, const std::string &episode_id);

    std::string command_;
    EnvConfig config_;
    std::chrono::milliseconds timeout_;
    std::unique_ptr<Subprocess> process_;
};

}  // namespace bathynav
