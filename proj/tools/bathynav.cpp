// bathynav command-line tool: genmaps, run, eval, bench.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "bathynav/bench.hpp"
#include "bathynav/io.hpp"
#include "bathynav/metrics.hpp"
#include "bathynav/protocol.hpp"
#include "bathynav/svg.hpp"

namespace fs = std::filesystem;
using namespace bathynav;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "a.b.c=value": value parsed as JSON when possible, otherwise taken as a string.
void apply_set(json &overrides, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) { throw UsageError("--set expects key=value, got '" + assignment + "'"); }
    const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception &) {
        value = raw;
    }
    json *node = &overrides;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) { throw UsageError("bad --set key '" + key + "'"); }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::unique_ptr<WorkerPool> make_pool() { return std::make_unique<WorkerPool>(WorkerPool::default_workers()); }

AgentFactory agent_factory(const RunConfig &cfg) {
    const std::string &spec = cfg.policy;
    if (spec.rfind("extern:", 0) == 0) {
        const std::string command = spec.substr(7);
        if (command.empty()) { throw UsageError("extern: policy needs a command"); }
        const auto timeout = std::chrono::milliseconds(std::llround(cfg.protocol_timeout * 1000.0));
        const EnvConfig env = cfg.env;
        return [command, env, timeout] { return std::make_unique<ExternalAgent>(command, env, timeout); };
    }
    std::unique_ptr<Policy> proto;
    try {
        proto = make_builtin_policy(spec, cfg.env);
    } catch (const InvalidParams &e) {
        throw UsageError(e.what());
    }
    return policy_agent_factory(*proto);
}

void ensure_dir(const std::string &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) { throw Error("cannot create directory '" + dir + "': " + ec.message()); }
}

std::ofstream open_text(const fs::path &path) {
    std::ofstream f(path);
    if (!f) { throw Error("cannot open '" + path.string() + "' for writing"); }
    return f;
}

std::vector<MapEntry> load_map_dir(const std::string &dir) {
    if (!fs::is_directory(dir)) { throw Error("map directory '" + dir + "' does not exist"); }
    std::vector<fs::path> files;
    for (const auto &e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".bathy") { files.push_back(e.path()); }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) { throw Error("map directory '" + dir + "' holds no .bathy files"); }
    std::vector<MapEntry> maps;
    for (const auto &f : files) {
        maps.push_back({f.stem().string(), std::make_shared<const DepthMap>(read_map(f.string()))});
    }
    return maps;
}

void check_map_matches(const DepthMap &map, RunConfig &cfg) {
    // The map file carries its own depth limit; the environment must agree.
    cfg.env.depth_limit = map.depth_limit();
}

int cmd_genmaps(RunConfig cfg) {
    cfg.validate();
    ensure_dir(cfg.out_dir);
    json manifest = {{"type", "manifest"}, {"config", to_json(cfg)}, {"maps", json::array()}};
    for (int i = 0; i < cfg.count; ++i) {
        MapGenParams p = cfg.generator;
        p.seed = cfg.seed + std::uint64_t(i);
        const DepthMap map = generate_map(p, cfg.extent_x, cfg.extent_y, cfg.cell_size, cfg.env.depth_limit);
        char name[32];
        std::snprintf(name, sizeof name, "map_%04d.bathy", i);
        const fs::path path = fs::path(cfg.out_dir) / name;
        write_map(path.string(), map);
        const double safe = double(largest_safe_component(map)) / double(map.geometry().cell_count());
        json entry = {{"file", name}, {"seed", p.seed}, {"largest_safe_fraction", safe}};
        std::cout << entry.dump() << '\n';
        manifest["maps"].push_back(std::move(entry));
    }
    auto f = open_text(fs::path(cfg.out_dir) / "manifest.json");
    f << manifest.dump(2) << '\n';
    std::cout << "wrote " << cfg.count << " maps to " << cfg.out_dir << '\n';
    return 0;
}

int cmd_run(RunConfig cfg) {
    if (cfg.map_file.empty()) { throw UsageError("run needs --map"); }
    const auto map = std::make_shared<const DepthMap>(read_map(cfg.map_file));
    check_map_matches(*map, cfg);
    cfg.validate();
    const std::string map_id = fs::path(cfg.map_file).stem().string();
    const auto factory = agent_factory(cfg);
    ensure_dir(cfg.output);

    auto log = open_text(fs::path(cfg.output) / "episodes.jsonl");
    log << json{{"type", "header"}, {"command", "run"}, {"map_id", map_id}, {"config", to_json(cfg)}}.dump() << '\n';

    auto agent = factory();
    Env env(cfg.env, map, map_id);
    std::size_t counts[6] = {};
    for (int e = 0; e < cfg.episodes; ++e) {
        const std::string id = episode_id(map_id, cfg.seed, std::size_t(e));
        const EpisodeRecord rec = agent->run_episode(env, episode_seed(cfg.seed, 0, std::size_t(e)), id);
        log << to_json(rec, id).dump() << '\n';
        ++counts[std::size_t(rec.outcome)];
        char stem[32];
        std::snprintf(stem, sizeof stem, "episode_%04d", e);
        if (cfg.svg) {
            auto svg = open_text(fs::path(cfg.output) / (std::string(stem) + ".svg"));
            SvgOptions opts;
            opts.max_speed = cfg.env.body.max_surge;
            svg << render_episode_svg(*map, rec, cfg.env.goal_radius, opts);
        }
        if (cfg.belief_snapshots) {
            write_belief_snapshot((fs::path(cfg.output) / (std::string(stem) + ".belief")).string(), env.belief());
        }
    }
    if (!log) { throw Error("failed writing episode log"); }
    std::cout << cfg.episodes << " episodes:";
    for (auto t : {Termination::Success, Termination::FailDepth, Termination::FailShore, Termination::FailTimeout,
                   Termination::ProtocolFail}) {
        std::cout << ' ' << to_string(t) << '=' << counts[std::size_t(t)];
    }
    std::cout << "\nlogs: " << (fs::path(cfg.output) / "episodes.jsonl").string() << '\n';
    return 0;
}

void print_stat(const char *name, const MetricStat &s) {
    std::cout << "  " << std::left << std::setw(13) << name << std::right << std::fixed << std::setprecision(4) << s.mean
              << " +/- " << s.std << '\n';
}

int cmd_eval(RunConfig cfg, bool write_logs) {
    const auto maps = load_map_dir(cfg.map_dir);
    check_map_matches(*maps.front().map, cfg);
    cfg.validate();
    if (cfg.episodes < 1) { throw UsageError("eval needs --episodes >= 1"); }
    if (cfg.seeds.empty()) { throw UsageError("eval needs at least one seed"); }
    const auto factory = agent_factory(cfg);
    auto pool = make_pool();
    EvalOptions opts;
    opts.episodes_per_map = cfg.episodes;
    opts.seeds = cfg.seeds;
    opts.keep_records = write_logs;
    const EvalResult res = evaluate(factory, maps, cfg.env, opts, pool.get());

    ensure_dir(cfg.output);
    auto rep = open_text(fs::path(cfg.output) / "report.jsonl");
    rep << json{{"type", "header"}, {"command", "eval"}, {"config", to_json(cfg)}}.dump() << '\n';
    write_report(rep, res.report);
    if (write_logs) {
        auto log = open_text(fs::path(cfg.output) / "episodes.jsonl");
        log << json{{"type", "header"}, {"command", "eval"}, {"config", to_json(cfg)}}.dump() << '\n';
        const std::size_t per_map = std::size_t(cfg.episodes), per_seed = per_map * maps.size();
        for (std::size_t t = 0; t < res.records.size(); ++t) {
            const std::size_t s = t / per_seed, e = t % per_map;
            log << to_json(res.records[t], episode_id(res.records[t].map_id, cfg.seeds[s], e)).dump() << '\n';
        }
    }
    const MetricsReport &r = res.report;
    std::cout << r.policy << " on " << maps.size() << " maps x " << cfg.episodes << " episodes x " << cfg.seeds.size()
              << " seeds\n";
    print_stat("SR", r.success_rate);
    print_stat("ES", r.efficiency);
    print_stat("MDB", r.depth_break_rate);
    print_stat("timeout", r.timeout_rate);
    print_stat("VS", r.velocity_smoothness);
    print_stat("HS", r.heading_smoothness);
    std::cout << "  protocol fails " << r.protocol_failures << '\n'
              << "report: " << (fs::path(cfg.output) / "report.jsonl").string() << '\n';
    return 0;
}

int cmd_bench(RunConfig cfg, const std::string &json_out) {
    std::shared_ptr<const DepthMap> map;
    if (!cfg.map_file.empty()) {
        map = std::make_shared<const DepthMap>(read_map(cfg.map_file));
        check_map_matches(*map, cfg);
    }
    cfg.validate();
    if (!map) {
        MapGenParams p = cfg.generator;
        p.seed = cfg.seed;
        map = std::make_shared<const DepthMap>(generate_map(p, cfg.extent_x, cfg.extent_y, cfg.cell_size, cfg.env.depth_limit));
    }
    auto pool = make_pool();
    const auto rows = run_bench(map, cfg.env, cfg.bench, cfg.seed, pool.get());
    std::cout << "workers " << pool->size() << ", " << cfg.bench.steps << " batch steps x " << cfg.bench.repeats
              << " repeats\n"
              << std::setw(6) << "batch" << std::setw(16) << "env-steps/s" << std::setw(12) << "+/-" << std::setw(16)
              << "latency us" << std::setw(12) << "+/-" << '\n';
    json out = json::array();
    for (const auto &r : rows) {
        std::cout << std::setw(6) << r.batch << std::fixed << std::setprecision(0) << std::setw(16) << r.steps_per_second
                  << std::setw(12) << r.steps_per_second_std << std::setprecision(1) << std::setw(16) << r.latency_us
                  << std::setw(12) << r.latency_us_std << '\n';
        out.push_back({{"batch", r.batch},
                       {"env_steps_per_second", r.steps_per_second},
                       {"env_steps_per_second_std", r.steps_per_second_std},
                       {"latency_us", r.latency_us},
                       {"latency_us_std", r.latency_us_std},
                       {"samples", r.samples}});
    }
    if (!json_out.empty()) {
        auto f = open_text(json_out);
        f << json{{"type", "bench"}, {"workers", pool->size()}, {"config", to_json(cfg)}, {"rows", out}}.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Depth-constrained ASV navigation: maps, episodes, evaluation, benchmarks"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "Override a config key, e.g. --set env.timeout=300");

    // Flag overrides; applied only when given.
    std::uint64_t seed = 0;
    std::string policy, output, map_file, map_dir, out_dir, json_out;
    int count = 0, episodes = 0, steps = 0, repeats = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<int> batch_sizes;
    bool svg = false, beliefs = false, logs = false;

    auto *gen = app.add_subcommand("genmaps", "Generate procedural depth maps");
    gen->add_option("--count", count, "Number of maps")->check(CLI::NonNegativeNumber);
    gen->add_option("--seed", seed, "Master seed; map i uses seed + i");
    gen->add_option("--out-dir", out_dir, "Output directory");

    auto *run = app.add_subcommand("run", "Run episodes on one map");
    run->add_option("--map", map_file, "Map file")->required();
    run->add_option("--policy", policy, "builtin:{privileged|gp_heuristic|random} or extern:<command>");
    run->add_option("--episodes", episodes, "Episode count")->check(CLI::NonNegativeNumber);
    run->add_option("--seed", seed, "Seed");
    run->add_option("--output", output, "Output directory");
    run->add_flag("--svg", svg, "Write one SVG per episode");
    run->add_flag("--belief-snapshots", beliefs, "Write the final belief of each episode");

    auto *ev = app.add_subcommand("eval", "Evaluate a policy over a map directory");
    ev->add_option("--map-dir", map_dir, "Directory of .bathy maps");
    ev->add_option("--policy", policy, "builtin:{privileged|gp_heuristic|random} or extern:<command>");
    ev->add_option("--episodes", episodes, "Episodes per map and seed")->check(CLI::PositiveNumber);
    ev->add_option("--seeds", seeds, "Evaluation seeds");
    ev->add_option("--output", output, "Output directory");
    ev->add_flag("--logs", logs, "Also write every episode log");

    auto *be = app.add_subcommand("bench", "Measure batch stepping throughput");
    be->add_option("--map", map_file, "Map file (default: generate one from --seed)");
    be->add_option("--batch-sizes", batch_sizes, "Batch sizes")->check(CLI::PositiveNumber);
    be->add_option("--steps", steps, "Batch steps per repeat")->check(CLI::PositiveNumber);
    be->add_option("--repeats", repeats, "Repeats")->check(CLI::PositiveNumber);
    be->add_option("--seed", seed, "Seed");
    be->add_option("--json", json_out, "Write results as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    auto given = [](const CLI::App *sub, const char *name) {
        const CLI::Option *o = sub->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    try {
        RunConfig cfg;
        try {
            if (!config_path.empty()) { cfg = load_run_config(config_path); }
            if (!sets.empty()) {
                json overrides = json::object();
                for (const auto &s : sets) { apply_set(overrides, s); }
                from_json_strict(overrides, cfg);
            }
        } catch (const FormatError &e) {
            throw UsageError(e.what());
        }
        const CLI::App *sub = app.get_subcommands().front();
        if (given(sub, "--seed")) { cfg.seed = seed; }
        if (given(sub, "--policy")) { cfg.policy = policy; }
        if (given(sub, "--episodes")) { cfg.episodes = episodes; }
        if (given(sub, "--output")) { cfg.output = output; }
        if (given(sub, "--map")) { cfg.map_file = map_file; }
        if (given(sub, "--map-dir")) { cfg.map_dir = map_dir; }
        if (given(sub, "--out-dir")) { cfg.out_dir = out_dir; }
        if (given(sub, "--count")) { cfg.count = count; }
        if (given(sub, "--seeds")) { cfg.seeds = seeds; }
        if (given(sub, "--batch-sizes")) { cfg.bench.batch_sizes = batch_sizes; }
        if (given(sub, "--steps")) { cfg.bench.steps = steps; }
        if (given(sub, "--repeats")) { cfg.bench.repeats = repeats; }
        if (svg) { cfg.svg = true; }
        if (beliefs) { cfg.belief_snapshots = true; }

        if (sub == gen) { return cmd_genmaps(cfg); }
        if (sub == run) { return cmd_run(cfg); }
        if (sub == ev) { return cmd_eval(cfg, logs); }
        return cmd_bench(cfg, json_out);
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const InvalidParams &e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
