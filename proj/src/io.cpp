#include "bathynav/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace bathynav {

namespace {

// Reads known keys from a JSON object and rejects anything else on finish().
class Fields {
public:
    Fields(const json &j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) { throw FormatError(where_ + ": expected an object"); }
    }

    void get(const char *key, double &out) {
        if (const json *v = find(key)) {
            if (!v->is_number()) { fail(key, "expected a number"); }
            out = v->get<double>();
        }
    }
    void get(const char *key, int &out) {
        if (const json *v = find(key)) {
            if (!v->is_number_integer()) { fail(key, "expected an integer"); }
            out = v->get<int>();
        }
    }
    void get(const char *key, std::uint64_t &out) {
        if (const json *v = find(key)) {
            if (!v->is_number_unsigned()) { fail(key, "expected a non-negative integer"); }
            out = v->get<std::uint64_t>();
        }
    }
    void get(const char *key, bool &out) {
        if (const json *v = find(key)) {
            if (!v->is_boolean()) { fail(key, "expected a boolean"); }
            out = v->get<bool>();
        }
    }
    void get(const char *key, std::string &out) {
        if (const json *v = find(key)) {
            if (!v->is_string()) { fail(key, "expected a string"); }
            out = v->get<std::string>();
        }
    }
    void get(const char *key, std::optional<double> &out) {
        if (const json *v = find(key)) {
            if (v->is_null()) {
                out.reset();
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                fail(key, "expected a number or null");
            }
        }
    }
    template<typename T>
    void get(const char *key, std::vector<T> &out) {
        if (const json *v = find(key)) {
            if (!v->is_array()) { fail(key, "expected an array"); }
            std::vector<T> tmp;
            for (const auto &e : *v) {
                if constexpr (std::is_same_v<T, std::uint64_t>) {
                    if (!e.is_number_unsigned()) { fail(key, "expected non-negative integers"); }
                } else {
                    if (!e.is_number_integer()) { fail(key, "expected integers"); }
                }
                tmp.push_back(e.get<T>());
            }
            out = std::move(tmp);
        }
    }
    const json *sub(const char *key) { return find(key); }
    [[nodiscard]] std::string path(const char *key) const { return where_ + "." + key; }

    void finish() const {
        for (const auto &[k, v] : j_.items()) {
            if (!seen_.count(k)) { throw FormatError(where_ + ": unknown key '" + k + "'"); }
        }
    }

private:
    const json *find(const char *key) {
        auto it = j_.find(key);
        if (it == j_.end()) { return nullptr; }
        seen_.insert(key);
        return &*it;
    }
    [[noreturn]] void fail(const char *key, const char *what) const { throw FormatError(path(key) + ": " + what); }

    const json &j_;
    std::string where_;
    std::set<std::string> seen_;
};

json optional_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

void put_f32(std::ostream &os, float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    const char bytes[4] = {char(bits & 0xff), char((bits >> 8) & 0xff), char((bits >> 16) & 0xff), char(bits >> 24)};
    os.write(bytes, 4);
}

void write_planes(std::ostream &os, const json &header, std::initializer_list<const Grid *> planes) {
    os << header.dump() << '\n';
    for (const Grid *g : planes) {
        for (Eigen::Index r = 0; r < g->rows(); ++r) {
            for (Eigen::Index c = 0; c < g->cols(); ++c) { put_f32(os, float((*g)(r, c))); }
        }
    }
    if (!os) { throw Error("write failed"); }
}

std::ofstream open_out(const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) { throw Error("cannot open '" + path + "' for writing"); }
    return f;
}

}  // namespace

void RunConfig::validate() const {
    if (!(extent_x > 0.0 && extent_y > 0.0 && cell_size > 0.0)) { throw InvalidParams("extent and cell size must be positive"); }
    if (episodes < 0) { throw InvalidParams("episodes must be >= 0"); }
    if (count < 0) { throw InvalidParams("count must be >= 0"); }
    if (!(protocol_timeout > 0.0)) { throw InvalidParams("protocol timeout must be positive"); }
    if (bench.steps < 1 || bench.repeats < 1) { throw InvalidParams("bench steps and repeats must be >= 1"); }
    for (int b : bench.batch_sizes) {
        if (b < 1) { throw InvalidParams("batch sizes must be >= 1"); }
    }
    generator.validate();
    env.validate();
}

json to_json(const MapGenParams &p) {
    return {{"seed", p.seed},
            {"radial_gradient_strength", p.radial_gradient_strength},
            {"noise_amplitude", p.noise_amplitude},
            {"noise_octaves", p.noise_octaves},
            {"smoothing_radius", p.smoothing_radius},
            {"max_depth", p.max_depth},
            {"target_margin", p.target_margin}};
}

void from_json_strict(const json &j, MapGenParams &p, const std::string &where) {
    Fields f(j, where);
    f.get("seed", p.seed);
    f.get("radial_gradient_strength", p.radial_gradient_strength);
    f.get("noise_amplitude", p.noise_amplitude);
    f.get("noise_octaves", p.noise_octaves);
    f.get("smoothing_radius", p.smoothing_radius);
    f.get("max_depth", p.max_depth);
    f.get("target_margin", p.target_margin);
    f.finish();
}

json to_json(const BodyParams &p) {
    return {{"mass", p.mass},
            {"inertia_x", p.inertia_x},
            {"inertia_y", p.inertia_y},
            {"inertia_z", p.inertia_z},
            {"surge_gain", p.surge_gain},
            {"yaw_gain", p.yaw_gain},
            {"surge_drag", p.surge_drag},
            {"sway_drag", p.sway_drag},
            {"sway_linear_drag", p.sway_linear_drag},
            {"yaw_drag", p.yaw_drag},
            {"max_surge_force", p.max_surge_force},
            {"max_yaw_moment", p.max_yaw_moment},
            {"min_surge", p.min_surge},
            {"max_surge", p.max_surge},
            {"max_yaw_rate", p.max_yaw_rate}};
}

void from_json_strict(const json &j, BodyParams &p, const std::string &where) {
    Fields f(j, where);
    f.get("mass", p.mass);
    f.get("inertia_x", p.inertia_x);
    f.get("inertia_y", p.inertia_y);
    f.get("inertia_z", p.inertia_z);
    f.get("surge_gain", p.surge_gain);
    f.get("yaw_gain", p.yaw_gain);
    f.get("surge_drag", p.surge_drag);
    f.get("sway_drag", p.sway_drag);
    f.get("sway_linear_drag", p.sway_linear_drag);
    f.get("yaw_drag", p.yaw_drag);
    f.get("max_surge_force", p.max_surge_force);
    f.get("max_yaw_moment", p.max_yaw_moment);
    f.get("min_surge", p.min_surge);
    f.get("max_surge", p.max_surge);
    f.get("max_yaw_rate", p.max_yaw_rate);
    f.finish();
}

json to_json(const EnvConfig &c) {
    return {{"history", c.history},
            {"dt", c.dt},
            {"depth_limit", c.depth_limit},
            {"goal_radius", c.goal_radius},
            {"timeout", c.timeout},
            {"discount", c.discount},
            {"min_start_goal_distance", c.min_start_goal_distance},
            {"max_start_goal_distance", c.max_start_goal_distance},
            {"reward",
             {{"progress_weight", c.reward.progress_weight},
              {"backward_weight", c.reward.backward_weight},
              {"depth_weight", c.reward.depth_weight},
              {"success_reward", c.reward.success_reward},
              {"failure_reward", c.reward.failure_reward}}},
            {"sensor", {{"noise_variance", c.sensor.noise_variance}}},
            {"kernel", {{"length_scale", c.kernel.length_scale}, {"truncation", c.kernel.truncation}}},
            {"body", to_json(c.body)},
            {"extrapolation",
             {{"enabled", c.extrapolation.enabled},
              {"step", optional_json(c.extrapolation.step)},
              {"confidence", c.extrapolation.confidence},
              {"min_motion", c.extrapolation.min_motion}}},
            {"gradient_lookahead", optional_json(c.gradient_lookahead)},
            {"prior_mean", optional_json(c.prior_mean)},
            {"prior_variance", optional_json(c.prior_variance)},
            {"seed", c.seed}};
}

void from_json_strict(const json &j, EnvConfig &c, const std::string &where) {
    Fields f(j, where);
    f.get("history", c.history);
    f.get("dt", c.dt);
    f.get("depth_limit", c.depth_limit);
    f.get("goal_radius", c.goal_radius);
    f.get("timeout", c.timeout);
    f.get("discount", c.discount);
    f.get("min_start_goal_distance", c.min_start_goal_distance);
    f.get("max_start_goal_distance", c.max_start_goal_distance);
    if (const json *r = f.sub("reward")) {
        Fields g(*r, f.path("reward"));
        g.get("progress_weight", c.reward.progress_weight);
        g.get("backward_weight", c.reward.backward_weight);
        g.get("depth_weight", c.reward.depth_weight);
        g.get("success_reward", c.reward.success_reward);
        g.get("failure_reward", c.reward.failure_reward);
        g.finish();
    }
    if (const json *s = f.sub("sensor")) {
        Fields g(*s, f.path("sensor"));
        g.get("noise_variance", c.sensor.noise_variance);
        g.finish();
    }
    if (const json *k = f.sub("kernel")) {
        Fields g(*k, f.path("kernel"));
        g.get("length_scale", c.kernel.length_scale);
        g.get("truncation", c.kernel.truncation);
        g.finish();
    }
    if (const json *b = f.sub("body")) { from_json_strict(*b, c.body, f.path("body")); }
    if (const json *e = f.sub("extrapolation")) {
        Fields g(*e, f.path("extrapolation"));
        g.get("enabled", c.extrapolation.enabled);
        g.get("step", c.extrapolation.step);
        g.get("confidence", c.extrapolation.confidence);
        g.get("min_motion", c.extrapolation.min_motion);
        g.finish();
    }
    f.get("gradient_lookahead", c.gradient_lookahead);
    f.get("prior_mean", c.prior_mean);
    f.get("prior_variance", c.prior_variance);
    f.get("seed", c.seed);
    f.finish();
}

json to_json(const RunConfig &c) {
    return {{"extent_x", c.extent_x},
            {"extent_y", c.extent_y},
            {"cell_size", c.cell_size},
            {"generator", to_json(c.generator)},
            {"env", to_json(c.env)},
            {"policy", c.policy},
            {"episodes", c.episodes},
            {"seed", c.seed},
            {"seeds", c.seeds},
            {"count", c.count},
            {"protocol_timeout", c.protocol_timeout},
            {"svg", c.svg},
            {"belief_snapshots", c.belief_snapshots},
            {"out_dir", c.out_dir},
            {"map_dir", c.map_dir},
            {"map_file", c.map_file},
            {"output", c.output},
            {"bench", {{"batch_sizes", c.bench.batch_sizes}, {"steps", c.bench.steps}, {"repeats", c.bench.repeats}}}};
}

void from_json_strict(const json &j, RunConfig &c) {
    Fields f(j, "config");
    f.get("extent_x", c.extent_x);
    f.get("extent_y", c.extent_y);
    f.get("cell_size", c.cell_size);
    if (const json *g = f.sub("generator")) { from_json_strict(*g, c.generator, "config.generator"); }
    if (const json *e = f.sub("env")) { from_json_strict(*e, c.env, "config.env"); }
    f.get("policy", c.policy);
    f.get("episodes", c.episodes);
    f.get("seed", c.seed);
    f.get("seeds", c.seeds);
    f.get("count", c.count);
    f.get("protocol_timeout", c.protocol_timeout);
    f.get("svg", c.svg);
    f.get("belief_snapshots", c.belief_snapshots);
    f.get("out_dir", c.out_dir);
    f.get("map_dir", c.map_dir);
    f.get("map_file", c.map_file);
    f.get("output", c.output);
    if (const json *b = f.sub("bench")) {
        Fields g(*b, "config.bench");
        g.get("batch_sizes", c.bench.batch_sizes);
        g.get("steps", c.bench.steps);
        g.get("repeats", c.bench.repeats);
        g.finish();
    }
    f.finish();
}

RunConfig load_run_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) { throw Error("cannot open config '" + path + "'"); }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception &e) {
        throw FormatError("config '" + path + "': " + e.what());
    }
    RunConfig c;
    from_json_strict(j, c);
    return c;
}

void write_map(std::ostream &os, const DepthMap &map) {
    const GridGeometry &g = map.geometry();
    const json header = {{"format", "bathynav-grid"},
                         {"version", 1},
                         {"kind", "depth"},
                         {"width_cells", g.cols},
                         {"height_cells", g.rows},
                         {"cell_size", g.cell_size},
                         {"depth_limit", map.depth_limit()},
                         {"seed", map.params().seed},
                         {"generator", to_json(map.params())},
                         {"planes", {"depth"}},
                         {"encoding", "float32-le"}};
    write_planes(os, header, {&map.depths()});
}

void write_map(const std::string &path, const DepthMap &map) {
    auto f = open_out(path);
    write_map(f, map);
}

Planes read_planes(std::istream &is) {
    std::string line;
    if (!std::getline(is, line)) { throw FormatError("missing header line"); }
    Planes out;
    try {
        out.header = json::parse(line);
    } catch (const json::exception &e) {
        throw FormatError(std::string("bad header: ") + e.what());
    }
    const json &h = out.header;
    if (!h.is_object() || h.value("format", "") != "bathynav-grid" || h.value("encoding", "") != "float32-le") {
        throw FormatError("not a bathynav grid file");
    }
    const int cols = h.at("width_cells").get<int>(), rows = h.at("height_cells").get<int>();
    if (cols < 1 || rows < 1) { throw FormatError("grid dimensions must be positive"); }
    const auto planes = h.at("planes").size();
    std::vector<char> buf(std::size_t(cols) * std::size_t(rows) * 4);
    for (std::size_t p = 0; p < planes; ++p) {
        if (!is.read(buf.data(), std::streamsize(buf.size()))) { throw FormatError("truncated grid data"); }
        Grid g(rows, cols);
        for (std::size_t i = 0; i < std::size_t(cols) * std::size_t(rows); ++i) {
            const auto *b = reinterpret_cast<const unsigned char *>(buf.data() + 4 * i);
            const std::uint32_t bits = std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
                                       std::uint32_t(b[3]) << 24;
            g.data()[i] = double(std::bit_cast<float>(bits));
        }
        out.planes.push_back(std::move(g));
    }
    if (is.peek() != std::char_traits<char>::eof()) { throw FormatError("trailing bytes after grid data"); }
    return out;
}

DepthMap read_map(std::istream &is) {
    Planes p = read_planes(is);
    const json &h = p.header;
    if (h.value("kind", "") != "depth" || p.planes.size() != 1) { throw FormatError("not a depth map file"); }
    MapGenParams params;
    try {
        from_json_strict(h.at("generator"), params);
        const GridGeometry geo{h.at("width_cells").get<int>(), h.at("height_cells").get<int>(),
                               h.at("cell_size").get<double>()};
        return DepthMap(geo, std::move(p.planes.front()), h.at("depth_limit").get<double>(), params);
    } catch (const json::exception &e) {
        throw FormatError(std::string("bad map header: ") + e.what());
    }
}

DepthMap read_map(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) { throw Error("cannot open map '" + path + "'"); }
    try {
        return read_map(f);
    } catch (const FormatError &e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_belief_snapshot(const std::string &path, const BeliefGrid &belief) {
    const GridGeometry &g = belief.geometry();
    const json header = {{"format", "bathynav-grid"},
                         {"version", 1},
                         {"kind", "belief"},
                         {"width_cells", g.cols},
                         {"height_cells", g.rows},
                         {"cell_size", g.cell_size},
                         {"planes", {"mean", "variance", "confidence"}},
                         {"encoding", "float32-le"}};
    const Grid mean = belief.mean_grid(), var = belief.variance_grid(), conf = belief.confidence_grid();
    auto f = open_out(path);
    write_planes(f, header, {&mean, &var, &conf});
}

namespace {

json state_json(const AsvState &s) { return json::array({s.x, s.y, s.psi, s.u, s.v, s.r}); }

AsvState state_from(const json &j) {
    if (!j.is_array() || j.size() != 6) { throw FormatError("state must be an array of 6 numbers"); }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
            j[3].get<double>(), j[4].get<double>(), j[5].get<double>()};
}

}  // namespace

json to_json(const EpisodeRecord &r, const std::string &episode_id) {
    json steps = json::array();
    for (const StepRecord &s : r.steps) {
        steps.push_back({state_json(s.state), {s.action.surge, s.action.yaw_rate}, s.depth, s.reward,
                         to_string(s.termination)});
    }
    return {{"type", "episode"},
            {"episode_id", episode_id},
            {"map_id", r.map_id},
            {"seed", r.seed},
            {"goal", {r.goal.x(), r.goal.y()}},
            {"start", state_json(r.start)},
            {"start_depth", r.start_depth},
            {"outcome", to_string(r.outcome)},
            {"length", r.steps.size()},
            {"steps", std::move(steps)}};
}

EpisodeRecord episode_from_json(const json &j) {
    try {
        EpisodeRecord r;
        r.map_id = j.at("map_id").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.goal = {j.at("goal").at(0).get<double>(), j.at("goal").at(1).get<double>()};
        r.start = state_from(j.at("start"));
        r.start_depth = j.at("start_depth").get<double>();
        r.outcome = termination_from_string(j.at("outcome").get<std::string>());
        for (const json &s : j.at("steps")) {
            StepRecord st;
            st.state = state_from(s.at(0));
            st.action = {s.at(1).at(0).get<double>(), s.at(1).at(1).get<double>()};
            st.depth = s.at(2).get<double>();
            st.reward = s.at(3).get<double>();
            st.termination = termination_from_string(s.at(4).get<std::string>());
            r.steps.push_back(st);
        }
        return r;
    } catch (const json::exception &e) {
        throw FormatError(std::string("bad episode record: ") + e.what());
    }
}

json to_json(const MetricSet &m) {
    return {{"episodes", m.episodes},
            {"successes", m.successes},
            {"depth_breaks", m.depth_breaks},
            {"timeouts", m.timeouts},
            {"protocol_failures", m.protocol_failures},
            {"transitions", m.transitions},
            {"SR", m.success_rate},
            {"ES", m.efficiency},
            {"MDB", m.depth_break_rate},
            {"timeout_rate", m.timeout_rate},
            {"VS", m.velocity_smoothness},
            {"HS", m.heading_smoothness}};
}

void write_report(std::ostream &os, const MetricsReport &report) {
    for (const auto &row : report.map_rows) {
        os << json{{"type", "row"}, {"policy", report.policy}, {"map_id", row.map_id}, {"seed", row.seed},
                   {"metrics", to_json(row.metrics)}}
                  .dump()
           << '\n';
    }
    for (const auto &row : report.seed_rows) {
        os << json{{"type", "seed"}, {"policy", report.policy}, {"seed", row.seed}, {"metrics", to_json(row.metrics)}}
                  .dump()
           << '\n';
    }
    auto stat = [](const MetricStat &s) { return json{{"mean", s.mean}, {"std", s.std}}; };
    os << json{{"type", "aggregate"},
               {"policy", report.policy},
               {"seeds", report.seed_rows.size()},
               {"timeout", report.timeout},
               {"protocol_failures", report.protocol_failures},
               {"SR", stat(report.success_rate)},
               {"ES", stat(report.efficiency)},
               {"MDB", stat(report.depth_break_rate)},
               {"timeout_rate", stat(report.timeout_rate)},
               {"VS", stat(report.velocity_smoothness)},
               {"HS", stat(report.heading_smoothness)}}
              .dump()
       << '\n';
}

}  // namespace bathynav
