#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bathynav/bench.hpp"
#include "bathynav/env.hpp"
#include "bathynav/metrics.hpp"

namespace bathynav {

using json = nlohmann::json;

/// Everything a subcommand needs. Serializes to and from JSON; unknown keys are rejected.
struct RunConfig {
    double extent_x = 50.0;
    double extent_y = 50.0;
    double cell_size = 0.1;
    MapGenParams generator;
    EnvConfig env;

    std::string policy = "builtin:gp_heuristic";
    int episodes = 10;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds{0};
    int count = 120;
    double protocol_timeout = 1.0;  // seconds per external step
    bool svg = false;
    bool belief_snapshots = false;

    std::string out_dir = "maps";
    std::string map_dir = "maps";
    std::string map_file;
    std::string output = "out";

    BenchSettings bench;

    void validate() const;
};

json to_json(const MapGenParams &p);
json to_json(const BodyParams &p);
json to_json(const EnvConfig &c);
json to_json(const RunConfig &c);

void from_json_strict(const json &j, MapGenParams &p, const std::string &where = "generator");
void from_json_strict(const json &j, BodyParams &p, const std::string &where = "body");
void from_json_strict(const json &j, EnvConfig &c, const std::string &where = "env");
/// Fields absent from `j` keep their current values, so this also applies overrides.
void from_json_strict(const json &j, RunConfig &c);

RunConfig load_run_config(const std::string &path);

/// Map file: one JSON header line, then the depths as row-major little-endian float32.
void write_map(std::ostream &os, const DepthMap &map);
void write_map(const std::string &path, const DepthMap &map);
DepthMap read_map(std::istream &is);
DepthMap read_map(const std::string &path);

/// Belief snapshot in the map layout with three planes: mean, variance, confidence.
void write_belief_snapshot(const std::string &path, const BeliefGrid &belief);

struct Planes {
    json header;
    std::vector<Grid> planes;
};
Planes read_planes(std::istream &is);

json to_json(const EpisodeRecord &r, const std::string &episode_id);
EpisodeRecord episode_from_json(const json &j);

json to_json(const MetricSet &m);
/// Report as JSON lines: one "row" record per (map, seed), one "seed" record per seed, one "aggregate".
void write_report(std::ostream &os, const MetricsReport &report);

}  // namespace bathynav
