#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bathynav/io.hpp"
#include "xml_check.hpp"

using bathynav::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result cli(const std::string &args) {
    const std::string command = std::string(BATHYNAV_CLI) + " " + args + " 2>/dev/null";
    FILE *p = popen(command.c_str(), "r");
    REQUIRE(p != nullptr);
    Result r;
    std::array<char, 4096> buf{};
    for (std::size_t n; (n = std::fread(buf.data(), 1, buf.size(), p)) > 0;) { r.out.append(buf.data(), n); }
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path workdir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "bathynav_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        std::ofstream(d / "small.json") << R"({
            "extent_x": 20, "extent_y": 20,
            "env": {"min_start_goal_distance": 3, "max_start_goal_distance": 12, "timeout": 300}
        })";
        return d;
    }();
    return dir;
}

std::string small() { return "--config " + (workdir() / "small.json").string() + " "; }

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<json> jsonl(const fs::path &p) {
    std::vector<json> out;
    std::ifstream f(p);
    for (std::string line; std::getline(f, line);) { out.push_back(json::parse(line)); }
    return out;
}

// Maps shared by the run/eval cases.
fs::path maps() {
    static const fs::path dir = [] {
        const fs::path d = workdir() / "maps";
        REQUIRE(cli(small() + "genmaps --count 2 --seed 5 --out-dir " + d.string()).code == 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("cli: genmaps") {
    const fs::path empty = workdir() / "none";
    const Result r = cli(small() + "genmaps --count 0 --out-dir " + empty.string());
    CHECK(r.code == 0);
    const json manifest = json::parse(slurp(empty / "manifest.json"));
    CHECK(manifest["maps"].empty());

    const fs::path again = workdir() / "again";
    REQUIRE(cli(small() + "genmaps --count 2 --seed 5 --out-dir " + again.string()).code == 0);
    for (const char *name : {"map_0000.bathy", "map_0001.bathy"}) {
        CHECK(slurp(maps() / name) == slurp(again / name));
        CHECK_FALSE(slurp(again / name).empty());
    }
    CHECK(slurp(maps() / "map_0000.bathy") != slurp(maps() / "map_0001.bathy"));

    std::ofstream(workdir() / "file") << "x";
    CHECK(cli(small() + "genmaps --count 1 --out-dir " + (workdir() / "file" / "sub").string()).code == 2);
}

TEST_CASE("cli: usage errors") {
    CHECK(cli("").code == 1);
    CHECK(cli("fly").code == 1);
    CHECK(cli("run").code == 1);
    CHECK(cli("genmaps --count -1").code == 1);
    CHECK(cli("genmaps --set nokey").code == 1);
    CHECK(cli("genmaps --set env.colour=1").code == 1);
    CHECK(cli("run --map " + (maps() / "map_0000.bathy").string() + " --policy builtin:oracle").code == 1);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("cli: run") {
    const std::string map = (maps() / "map_0000.bathy").string();
    const fs::path out = workdir() / "run_random";
    const Result r = cli(small() + "run --map " + map + " --policy builtin:random --episodes 10 --seed 3 --svg --output " +
                         out.string());
    REQUIRE(r.code == 0);
    const auto log = jsonl(out / "episodes.jsonl");
    REQUIRE(log.size() == 11);
    CHECK(log[0]["type"] == "header");
    for (int e = 0; e < 10; ++e) {
        CHECK(log[std::size_t(e) + 1]["episode_id"] == "map_0000:3:" + std::to_string(e));
        char name[32];
        std::snprintf(name, sizeof name, "episode_%04d.svg", e);
        std::string why;
        CHECK_MESSAGE(xml_check::well_formed(slurp(out / name), why), why);
    }

    CHECK(cli("run --map " + (workdir() / "absent.bathy").string()).code == 2);
}

TEST_CASE("cli: external controller logs match the builtin policy") {
    const std::string map = (maps() / "map_0001.bathy").string();
    const fs::path a = workdir() / "run_builtin", b = workdir() / "run_extern";
    REQUIRE(cli(small() + "run --map " + map + " --policy builtin:gp_heuristic --episodes 3 --output " + a.string()).code ==
            0);
    REQUIRE(cli(small() + "run --map " + map + " --policy extern:" + BATHYNAV_REPLAY + " --episodes 3 --output " +
                b.string())
                .code == 0);
    const auto x = jsonl(a / "episodes.jsonl"), y = jsonl(b / "episodes.jsonl");
    REQUIRE(x.size() == 4);
    REQUIRE(y.size() == 4);
    for (std::size_t i = 1; i < 4; ++i) { CHECK(x[i].dump() == y[i].dump()); }
}

TEST_CASE("cli: eval") {
    CHECK(cli(small() + "eval --map-dir " + (workdir() / "nowhere").string()).code == 2);

    const fs::path one = workdir() / "eval_one";
    REQUIRE(cli(small() + "eval --map-dir " + maps().string() +
                " --policy builtin:random --episodes 2 --seeds 7 --logs --output " + one.string())
                .code == 0);
    const auto rep = jsonl(one / "report.jsonl");
    REQUIRE_FALSE(rep.empty());
    const json &agg = rep.back();
    CHECK(agg["type"] == "aggregate");
    for (const char *k : {"SR", "ES", "MDB", "VS", "HS"}) { CHECK(agg[k]["std"] == 0.0); }
    CHECK(jsonl(one / "episodes.jsonl").size() == 1 + 2 * 2);

    const fs::path two = workdir() / "eval_two";
    REQUIRE(cli(small() + "eval --map-dir " + maps().string() + " --policy builtin:random --episodes 2 --seeds 7 8 --output " +
                two.string())
                .code == 0);
    int seed_rows = 0, map_rows = 0;
    for (const auto &line : jsonl(two / "report.jsonl")) {
        seed_rows += line["type"] == "seed";
        map_rows += line["type"] == "row";
    }
    CHECK(seed_rows == 2);
    CHECK(map_rows == 4);
    CHECK(jsonl(two / "report.jsonl").back()["seeds"] == 2);
}

TEST_CASE("cli: bench") {
    const fs::path out = workdir() / "bench.json";
    const Result r = cli(small() + "bench --batch-sizes 1 4 --steps 20 --repeats 2 --json " + out.string());
    REQUIRE(r.code == 0);
    const json j = json::parse(slurp(out));
    REQUIRE(j["rows"].size() == 2);
    CHECK(j["rows"][1]["batch"] == 4);
    CHECK(j["rows"][1]["env_steps_per_second"].get<double>() > 0.0);
}
