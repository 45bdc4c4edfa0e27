#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bathynav/io.hpp"
#include "bathynav/protocol.hpp"
#include "bathynav/svg.hpp"
#include "xml_check.hpp"

using namespace bathynav;
namespace fs = std::filesystem;

namespace {

DepthMap sample_map() {
    MapGenParams p;
    p.seed = 21;
    p.noise_octaves = 3;
    p.target_margin = 0.3;
    return generate_map(p, 12.0, 8.0, 0.1, 2.0);
}

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / "bathynav_test_io";
    fs::create_directories(dir);
    return dir / name;
}

EpisodeRecord sample_episode() {
    auto map = std::make_shared<const DepthMap>(sample_map());
    EnvConfig cfg;
    cfg.min_start_goal_distance = 2.0;
    cfg.max_start_goal_distance = 8.0;
    cfg.timeout = 120;
    Env env(cfg, map, "sample");
    RandomPolicy pol(cfg.body);
    return run_policy_episode(env, pol, 12);
}

}  // namespace

TEST_CASE("map files round-trip bit for bit") {
    const DepthMap m = sample_map();
    std::stringstream ss;
    write_map(ss, m);
    const std::string bytes = ss.str();

    std::string header = bytes.substr(0, bytes.find('\n'));
    const json h = json::parse(header);
    CHECK(h["format"] == "bathynav-grid");
    CHECK(h["kind"] == "depth");
    CHECK(h["width_cells"] == 120);
    CHECK(h["height_cells"] == 80);
    CHECK(h["cell_size"] == 0.1);
    CHECK(h["depth_limit"] == 2.0);
    CHECK(h["seed"] == 21);
    CHECK(h["encoding"] == "float32-le");
    CHECK(bytes.size() == header.size() + 1 + 120 * 80 * 4);

    std::stringstream in(bytes);
    const DepthMap r = read_map(in);
    CHECK(r.geometry() == m.geometry());
    CHECK((r.depths() == m.depths()).all());
    CHECK(r.depth_limit() == m.depth_limit());
    CHECK(r.params().seed == 21);
    CHECK(r.params().noise_octaves == 3);

    std::stringstream again;
    write_map(again, r);
    CHECK(again.str() == bytes);

    const fs::path path = scratch("m.bathy");
    write_map(path.string(), m);
    CHECK((read_map(path.string()).depths() == m.depths()).all());
}

TEST_CASE("malformed map files are rejected") {
    const DepthMap m = sample_map();
    std::stringstream ss;
    write_map(ss, m);
    const std::string bytes = ss.str();

    std::stringstream trailing(bytes + "x");
    CHECK_THROWS_AS(read_map(trailing), FormatError);
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_map(truncated), FormatError);
    std::stringstream garbage("hello\n");
    CHECK_THROWS_AS(read_map(garbage), FormatError);
    std::stringstream empty("");
    CHECK_THROWS_AS(read_map(empty), FormatError);

    json h = json::parse(bytes.substr(0, bytes.find('\n')));
    h["generator"]["colour"] = 1;
    std::stringstream extra(h.dump() + "\n" + bytes.substr(bytes.find('\n') + 1));
    CHECK_THROWS_AS(read_map(extra), FormatError);

    CHECK_THROWS_AS(read_map(scratch("missing.bathy").string()), Error);
}

TEST_CASE("belief snapshots hold mean, variance and confidence") {
    const GridGeometry g{30, 20, 0.1};
    BeliefGrid b(g, KernelConfig{}, 1.0, 0.5);
    b.update(Vec2(1.0, 1.0), 1.4, 0.01);
    b.update(Vec2(2.0, 1.2), 0.9, 0.01, 0.5, false);
    const fs::path path = scratch("b.belief");
    write_belief_snapshot(path.string(), b);

    std::ifstream in(path, std::ios::binary);
    const Planes p = read_planes(in);
    CHECK(p.header["kind"] == "belief");
    REQUIRE(p.planes.size() == 3);
    CHECK((p.planes[0] == b.mean_grid().cast<float>().cast<double>()).all());
    CHECK((p.planes[1] == b.variance_grid().cast<float>().cast<double>()).all());
    CHECK((p.planes[2] == b.confidence_grid().cast<float>().cast<double>()).all());

    std::ifstream again(path, std::ios::binary);
    CHECK_THROWS_AS(read_map(again), FormatError);
}

TEST_CASE("run configuration serialization") {
    RunConfig c;
    c.env.history = 3;
    c.env.extrapolation.step = 0.4;
    c.env.prior_mean = 0.8;
    c.env.body.mass = 42.0;
    c.generator.noise_amplitude = 0.25;
    c.seeds = {1, 2, 3};
    c.bench.batch_sizes = {2, 4};
    const json j = to_json(c);

    RunConfig r;
    from_json_strict(j, r);
    CHECK(to_json(r) == j);
    CHECK(r.env.history == 3);
    CHECK(*r.env.extrapolation.step == 0.4);
    CHECK(!r.env.gradient_lookahead.has_value());
    CHECK(r.env.body.mass == 42.0);
    CHECK(r.seeds == std::vector<std::uint64_t>{1, 2, 3});

    SUBCASE("partial documents override only what they name") {
        RunConfig o;
        from_json_strict(json::parse(R"({"episodes": 4, "env": {"reward": {"depth_weight": 2.5}}})"), o);
        CHECK(o.episodes == 4);
        CHECK(o.env.reward.depth_weight == 2.5);
        CHECK(o.env.reward.progress_weight == 10.0);
        CHECK(o.env.history == 5);
    }

    SUBCASE("unknown keys and wrong types are rejected") {
        RunConfig o;
        CHECK_THROWS_AS(from_json_strict(json::parse(R"({"episode": 4})"), o), FormatError);
        CHECK_THROWS_AS(from_json_strict(json::parse(R"({"env": {"reward": {"bonus": 1}}})"), o), FormatError);
        CHECK_THROWS_AS(from_json_strict(json::parse(R"({"env": {"body": {"mas": 1}}})"), o), FormatError);
        CHECK_THROWS_AS(from_json_strict(json::parse(R"({"episodes": "four"})"), o), FormatError);
        CHECK_THROWS_AS(from_json_strict(json::parse(R"({"env": {"history": 2.5}})"), o), FormatError);
        CHECK_THROWS_AS(from_json_strict(json::parse(R"([1, 2])"), o), FormatError);
    }

    SUBCASE("config files") {
        const fs::path path = scratch("cfg.json");
        std::ofstream(path) << R"({"policy": "builtin:random", "env": {"timeout": 50}})";
        const RunConfig f = load_run_config(path.string());
        CHECK(f.policy == "builtin:random");
        CHECK(f.env.timeout == 50);

        std::ofstream(path) << "{not json";
        CHECK_THROWS_AS(load_run_config(path.string()), FormatError);
        CHECK_THROWS_AS(load_run_config(scratch("nope.json").string()), Error);
    }

    RunConfig bad;
    bad.episodes = -1;
    CHECK_THROWS_AS(bad.validate(), InvalidParams);
}

TEST_CASE("episode logs reproduce the metrics exactly") {
    const EpisodeRecord e = sample_episode();
    const json j = to_json(e, "sample:0:0");
    CHECK(j["episode_id"] == "sample:0:0");
    CHECK(j["length"] == e.steps.size());

    const EpisodeRecord r = episode_from_json(json::parse(j.dump()));
    CHECK(r.map_id == e.map_id);
    CHECK(r.seed == e.seed);
    CHECK(r.goal == e.goal);
    CHECK(r.start == e.start);
    CHECK(r.outcome == e.outcome);
    REQUIRE(r.steps.size() == e.steps.size());
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
        CHECK(r.steps[i].state == e.steps[i].state);
        CHECK(r.steps[i].action == e.steps[i].action);
        CHECK(r.steps[i].reward == e.steps[i].reward);
        CHECK(r.steps[i].termination == e.steps[i].termination);
    }

    const std::vector<EpisodeRecord> a{e}, b{r};
    CHECK(to_json(compute_metrics(a, 120)) == to_json(compute_metrics(b, 120)));

    CHECK_THROWS_AS(episode_from_json(json::parse(R"({"map_id": "x"})")), FormatError);
}

TEST_CASE("report lines") {
    const std::vector<EpisodeRecord> eps{sample_episode()};
    const std::vector<std::uint64_t> seeds{0, 1};
    const std::vector<std::string> maps{"a", "b"};
    const MetricsReport rep = build_report("random", 120, seeds, maps, [&](std::size_t, std::size_t) {
        return std::span<const EpisodeRecord>(eps);
    });
    std::stringstream ss;
    write_report(ss, rep);
    std::vector<json> lines;
    for (std::string line; std::getline(ss, line);) { lines.push_back(json::parse(line)); }
    REQUIRE(lines.size() == 7);
    CHECK(lines[0]["type"] == "row");
    CHECK(lines[4]["type"] == "seed");
    CHECK(lines[6]["type"] == "aggregate");
    CHECK(lines[6]["SR"]["std"] == 0.0);
    CHECK(lines[6]["seeds"] == 2);
}

TEST_CASE("protocol records") {
    EnvConfig cfg;
    const json hello = hello_record(cfg);
    CHECK(hello["type"] == "hello");
    CHECK(hello["history"] == 5);
    CHECK(hello["observation_width"] == 15);
    EnvConfig back;
    from_json_strict(hello["config"], back);
    CHECK(to_json(back) == hello["config"]);

    ObservationWindow w(2);
    const json step = step_record("m:0:1", 3, w, -0.5, Termination::FailDepth, StepInfo{});
    CHECK(step["obs"].size() == 30);
    CHECK(step["done"] == true);
    CHECK(step["info"]["termination"] == "fail_depth");

    const Action a = parse_reply(R"({"episode_id": "m:0:1", "action": [0.5, -0.25]})", "m:0:1");
    CHECK(a == Action{0.5, -0.25});
    CHECK_THROWS_AS(parse_reply("not json", "m:0:1"), ProtocolError);
    CHECK_THROWS_AS(parse_reply(R"({"episode_id": "m:0:2", "action": [0, 0]})", "m:0:1"), ProtocolError);
    CHECK_THROWS_AS(parse_reply(R"({"episode_id": "m:0:1", "action": [0]})", "m:0:1"), ProtocolError);
    CHECK_THROWS_AS(parse_reply(R"({"episode_id": "m:0:1", "action": ["a", 0]})", "m:0:1"), ProtocolError);
    CHECK_THROWS_AS(parse_reply(R"([1, 2])", "m:0:1"), ProtocolError);
}

TEST_CASE("external controllers") {
    auto map = std::make_shared<const DepthMap>(sample_map());
    EnvConfig cfg;
    cfg.min_start_goal_distance = 2.0;
    cfg.max_start_goal_distance = 8.0;
    cfg.timeout = 60;

    SUBCASE("replaying the builtin heuristic reproduces its episodes") {
        Env a(cfg, map, "s"), b(cfg, map, "s");
        GpHeuristicPolicy builtin(gp_heuristic_config(cfg));
        ExternalAgent ext(BATHYNAV_REPLAY, cfg);
        for (std::uint64_t seed : {1, 2, 3}) {
            const EpisodeRecord x = run_policy_episode(a, builtin, seed);
            const EpisodeRecord y = ext.run_episode(b, seed, episode_id("s", 0, seed));
            CHECK(to_json(x, "e").dump() == to_json(y, "e").dump());
        }
    }

    SUBCASE("silent controller times out") {
        Env env(cfg, map);
        ExternalAgent ext("sleep 5", cfg, std::chrono::milliseconds(100));
        CHECK(ext.run_episode(env, 1, "x").outcome == Termination::ProtocolFail);
    }

    SUBCASE("garbage replies and dead processes are protocol failures") {
        Env env(cfg, map);
        ExternalAgent garbage("while read l; do echo nonsense; done", cfg);
        CHECK(garbage.run_episode(env, 1, "x").outcome == Termination::ProtocolFail);
        ExternalAgent dead("true", cfg);
        CHECK(dead.run_episode(env, 1, "x").outcome == Termination::ProtocolFail);
        // The agent restarts its process for the next episode.
        CHECK(dead.run_episode(env, 2, "y").outcome == Termination::ProtocolFail);
    }
}

TEST_CASE("contours and svg rendering") {
    const GridGeometry g{10, 6, 1.0};
    Grid ramp(6, 10);
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 10; ++c) { ramp(r, c) = c; }
    }
    const auto segs = contour_segments(ramp, g, 4.25);
    CHECK(segs.size() == 5);
    for (const auto &s : segs) {
        CHECK(s.a.x() == doctest::Approx(4.75));
        CHECK(s.b.x() == doctest::Approx(4.75));
    }
    CHECK(contour_segments(ramp, g, 20.0).empty());

    const DepthMap m = sample_map();
    EpisodeRecord e = sample_episode();
    e.map_id = "a<b>&\"c\"";
    const std::string svg = render_episode_svg(m, e, 1.0);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("<line ") != std::string::npos);
    CHECK(svg.find("data-label=\"depth limit\"") != std::string::npos);
    CHECK(svg.find("class=\"start\"") != std::string::npos);
    CHECK(svg.find("class=\"goal\"") != std::string::npos);
    CHECK(svg.find("a&lt;b&gt;&amp;") != std::string::npos);
    std::string why;
    CHECK_MESSAGE(xml_check::well_formed(svg, why), why);
}
