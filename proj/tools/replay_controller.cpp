// Stdio controller that answers every step record with the builtin gp_heuristic action.
// Usable as: bathynav run --policy "extern:bathynav_replay_controller" ...

#include <iostream>
#include <string>

#include "bathynav/io.hpp"
#include "bathynav/policy.hpp"

using namespace bathynav;

int main() {
    std::ios::sync_with_stdio(false);
    std::optional<GpHeuristicConfig> cfg;
    int history = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        const json msg = json::parse(line, nullptr, false);
        if (msg.is_discarded() || !msg.is_object()) {
            std::cerr << "replay_controller: malformed record\n";
            return 2;
        }
        const std::string type = msg.value("type", "");
        if (type == "hello") {
            EnvConfig env;
            from_json_strict(msg.at("config"), env);
            cfg = gp_heuristic_config(env);
            history = msg.at("history").get<int>();
        } else if (type == "step") {
            if (msg.at("done").get<bool>()) { continue; }
            if (!cfg) {
                std::cerr << "replay_controller: step before hello\n";
                return 2;
            }
            const auto window = ObservationWindow::from_flat(history, msg.at("obs").get<std::vector<double>>());
            const Action a = policy_gp_heuristic(window, *cfg);
            std::cout << json{{"episode_id", msg.at("episode_id")}, {"action", {a.surge, a.yaw_rate}}}.dump() << '\n'
                      << std::flush;
        } else if (type == "bye") {
            break;
        }
    }
    return 0;
}
