#include <doctest.h>

#include <random>

#include "bathynav/batch.hpp"
#include "bathynav/metrics.hpp"
#include "bathynav/policy.hpp"
#include "oracles.hpp"

using namespace bathynav;

namespace {

std::shared_ptr<const DepthMap> small_map(std::uint64_t seed = 1) {
    MapGenParams p;
    p.seed = seed;
    return std::make_shared<const DepthMap>(generate_map(p, 20.0, 20.0, 0.1, 2.0));
}

EnvConfig small_config() {
    EnvConfig c;
    c.min_start_goal_distance = 3.0;
    c.max_start_goal_distance = 12.0;
    c.timeout = 300;
    return c;
}

bool same_state(const AsvState &a, const AsvState &b) { return a == b; }

}  // namespace

TEST_CASE("depth penalty") {
    const double L = 2.0;
    CHECK(depth_penalty(L / 2, L) == 0.0);
    CHECK(depth_penalty(0.0, L) == 1.0);
    CHECK(depth_penalty(2 * L / 3, L) == 0.0);
    CHECK(depth_penalty(L / 3, L) == 0.0);
    CHECK(depth_penalty(L, L) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(depth_penalty(3 * L, L) == 1.0);
    CHECK(depth_penalty(L / 6, L) == doctest::Approx(0.5));
    CHECK(depth_penalty(5 * L / 6, L) == doctest::Approx(0.5));
    CHECK_THROWS_AS(depth_penalty(-0.1, L), NegativeDepth);

    double prev = depth_penalty(0.0, L);
    for (int i = 1; i <= 10000; ++i) {
        const double z = L * i / 10000.0;
        const double v = depth_penalty(z, L);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        REQUIRE(std::abs(v - prev) <= 3.0 / L * (L / 10000.0) + 1e-12);
        prev = v;
    }
}

TEST_CASE("observation geometry") {
    const GridGeometry g{100, 100, 0.1};
    const BeliefGrid b(g, KernelConfig{}, 1.0, 1.0);

    const AsvState east{5.0, 5.0, 0.0, 0.0, 0.0, 0.0};
    const Observation north = make_observation(east, Vec2(5.0, 8.0), 0.0, 0.0, Action{}, 1.0, b, 0.1);
    CHECK(north.target_range == doctest::Approx(3.0));
    CHECK(north.target_bearing == doctest::Approx(std::numbers::pi / 2));

    const Observation behind = make_observation(east, Vec2(2.0, 5.0), 0.0, 0.0, Action{}, 1.0, b, 0.1);
    CHECK(behind.target_bearing == std::numbers::pi);

    const Observation at = make_observation(east, Vec2(5.0, 5.0), 0.0, 0.0, Action{}, 1.0, b, 0.1);
    CHECK(at.target_range == 0.0);
    CHECK(at.target_bearing == 0.0);

    Observation o = north;
    o.prev_action = {0.3, -0.2};
    o.gradients[Left] = {0.7, 0.25};
    const auto flat = o.flatten();
    CHECK(flat.size() == 15);
    CHECK(flat[4] == 0.3);
    CHECK(flat[9] == 0.7);
    CHECK(flat[13] == 0.25);
    const Observation back = Observation::unflatten(flat.data());
    CHECK(back.flatten() == flat);

    CHECK_THROWS_AS(ObservationWindow::from_flat(2, std::vector<double>(29)), LengthMismatch);
}

TEST_CASE("reset") {
    auto map = small_map();
    Env env(small_config(), map, "m");
    const ObservationWindow w = env.reset(5);
    for (int t = 1; t < w.history(); ++t) {
        CHECK(std::equal(w.row(0), w.row(0) + kObservationWidth, w.row(t)));
    }
    CHECK(w.flat().size() == std::size_t(15 * env.config().history));

    const auto start = map->geometry().cell_of(env.state().position());
    CHECK(map->is_safe(start));
    CHECK(env.field().reachable(start));
    CHECK(env.field().distance(start) >= 3.0);
    CHECK(env.field().distance(start) <= 12.0);
    CHECK(env.state().u == 0.0);
    CHECK(env.state().v == 0.0);
    CHECK(env.state().r == 0.0);
    CHECK(env.belief().reading_count() == 1);
    CHECK((env.field().distances() == oracle::geodesic(*map, env.field().goal())).all());

    Env other(small_config(), map, "m");
    other.reset(5);
    CHECK(same_state(other.state(), env.state()));
    CHECK(other.goal() == env.goal());
    CHECK(other.window() == env.window());
    other.reset(6);
    CHECK_FALSE(same_state(other.state(), env.state()));

    CHECK_THROWS_AS(Env(small_config(), map).step(Action{}), SteppingTerminatedEpisode);
}

TEST_CASE("reset fails without room for a start and goal") {
    Grid d = Grid::Constant(30, 30, 1.0);
    d.row(0).setZero();
    d.row(29).setZero();
    d.col(0).setZero();
    d.col(29).setZero();
    auto map = std::make_shared<const DepthMap>(GridGeometry{30, 30, 0.1}, d, 2.0);
    EnvConfig c;
    c.min_start_goal_distance = 10.0;
    Env env(c, map);
    CHECK_THROWS_AS(env.reset(1), NoValidPlacement);
}

TEST_CASE("steps, rewards and terminations") {
    auto map = small_map();
    const EnvConfig cfg = small_config();
    Env env(cfg, map, "m");
    RandomPolicy random(cfg.body);
    PrivilegedPolicy privileged(cfg.body);

    const double bound = std::max({cfg.reward.success_reward, -cfg.reward.failure_reward,
                                   cfg.reward.progress_weight * cfg.body.max_surge * cfg.dt * std::sqrt(2.0) +
                                       cfg.reward.backward_weight * std::abs(cfg.body.min_surge) + cfg.reward.depth_weight});
    int successes = 0, depth_fails = 0, running = 0;
    for (int ep = 0; ep < 30; ++ep) {
        Policy &pol = ep % 2 ? static_cast<Policy &>(random) : static_cast<Policy &>(privileged);
        env.reset(std::uint64_t(ep));
        pol.begin_episode(std::uint64_t(ep));
        std::vector<Observation> newest{env.window().newest()};
        while (env.running()) {
            const Action a = pol.act({env.window(), &env});
            const AsvState before = env.state();
            const auto prev_cell = map->geometry().cell_of(before.position());
            const StepOutcome out = env.step(a);
            const Action cmd = a.clamped(cfg.body);
            CHECK(out.info.backward == std::abs(std::min(cmd.surge, 0.0)));
            CHECK(out.info.depth_penalty == depth_penalty(std::max(env.last_depth(), 0.0), cfg.depth_limit));
            switch (out.termination) {
                case Termination::Success:
                    ++successes;
                    CHECK(out.reward == 200.0);
                    CHECK((env.state().position() - env.goal()).norm() <= cfg.goal_radius);
                    break;
                case Termination::FailDepth:
                    ++depth_fails;
                    CHECK(out.reward == -100.0);
                    CHECK(map->classify(map->geometry().cell_of(env.state().position())) == CellClass::DeepUnsafe);
                    break;
                case Termination::FailShore:
                case Termination::FailTimeout:
                    CHECK(out.reward == -100.0);
                    break;
                default: {
                    ++running;
                    const auto cell = map->geometry().cell_of(env.state().position());
                    CHECK(out.info.progress == env.field().distance(cell) - env.field().distance(prev_cell));
                    CHECK(out.reward == -cfg.reward.progress_weight * out.info.progress -
                                            cfg.reward.backward_weight * out.info.backward -
                                            cfg.reward.depth_weight * out.info.depth_penalty);
                    CHECK(std::abs(out.reward) <= bound + 1e-9);
                    CHECK(out.reward != 200.0);
                    CHECK(out.reward != -100.0);
                }
            }
            // Row T-1-k of the window is the observation built k steps ago.
            newest.push_back(out.window.newest());
            const int T = out.window.history();
            for (int k = 0; k < T && k < int(newest.size()); ++k) {
                CHECK(out.window.at(T - 1 - k).flatten() == newest[newest.size() - 1 - std::size_t(k)].flatten());
            }
            for (double v : out.window.flat()) { REQUIRE(std::isfinite(v)); }
        }
        CHECK(env.record().outcome == env.termination());
        CHECK(int(env.record().steps.size()) == env.step_count());
        CHECK(env.step_count() <= cfg.timeout);
        CHECK_THROWS_AS(env.step(Action{}), SteppingTerminatedEpisode);
    }
    CHECK(successes > 0);
    CHECK(depth_fails + running > 0);
}

TEST_CASE("backward penalty follows the commanded surge") {
    auto map = small_map();
    Env env(small_config(), map);
    env.reset(3);
    CHECK(env.step(Action{-0.3, 0.0}).info.backward == doctest::Approx(0.3));
    CHECK(env.step(Action{0.5, 0.0}).info.backward == 0.0);
}

TEST_CASE("timeout ends the episode as a failure") {
    auto map = small_map();
    EnvConfig cfg = small_config();
    cfg.timeout = 7;
    Env env(cfg, map);
    env.reset(4);
    StepOutcome out;
    while (env.running()) { out = env.step(Action{}); }
    CHECK(env.step_count() == 7);
    CHECK(out.termination == Termination::FailTimeout);
    CHECK(out.reward == -100.0);
}

TEST_CASE("episodes are reproducible") {
    auto map = small_map();
    const EnvConfig cfg = small_config();
    auto run = [&](std::uint64_t seed) {
        Env env(cfg, map, "m");
        RandomPolicy pol(cfg.body);
        return run_policy_episode(env, pol, seed);
    };
    const EpisodeRecord a = run(77), b = run(77);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].state == b.steps[i].state);
        CHECK(a.steps[i].action == b.steps[i].action);
        CHECK(a.steps[i].depth == b.steps[i].depth);
        CHECK(a.steps[i].reward == b.steps[i].reward);
    }
    CHECK(a.outcome == b.outcome);
}

TEST_CASE("batch stepping matches sequential stepping") {
    auto map = small_map(2);
    const EnvConfig cfg = small_config();
    const int n = 16;
    std::vector<std::unique_ptr<Env>> batch, seq;
    for (int i = 0; i < n; ++i) {
        batch.push_back(std::make_unique<Env>(cfg, map));
        seq.push_back(std::make_unique<Env>(cfg, map));
        batch.back()->reset(std::uint64_t(100 + i));
        seq.back()->reset(std::uint64_t(100 + i));
    }
    std::vector<Env *> ptrs;
    for (auto &e : batch) { ptrs.push_back(e.get()); }

    WorkerPool pool(3);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 2.0), w(-1.0, 1.0);
    for (int t = 0; t < 150; ++t) {
        std::vector<Action> actions;
        for (int i = 0; i < n; ++i) { actions.push_back({u(rng), w(rng)}); }
        const auto out = batch_step(ptrs, actions, BatchOptions{true}, t % 2 ? &pool : nullptr);
        for (int i = 0; i < n; ++i) {
            const StepOutcome ref = seq[std::size_t(i)]->step(actions[std::size_t(i)]);
            if (!seq[std::size_t(i)]->running()) { seq[std::size_t(i)]->reset(seq[std::size_t(i)]->next_episode_seed()); }
            REQUIRE(out[std::size_t(i)].window == ref.window);
            REQUIRE(out[std::size_t(i)].reward == ref.reward);
            REQUIRE(out[std::size_t(i)].termination == ref.termination);
            REQUIRE(batch[std::size_t(i)]->state() == seq[std::size_t(i)]->state());
        }
    }

    SUBCASE("batch of one") {
        Env a(cfg, map), b(cfg, map);
        a.reset(9);
        b.reset(9);
        Env *pa = &a;
        const Action act{1.0, 0.2};
        const auto out = batch_step(std::span<Env *const>(&pa, 1), std::span<const Action>(&act, 1));
        CHECK(out[0].window == b.step(act).window);
    }

    SUBCASE("errors") {
        std::vector<Action> short_actions(std::size_t(n - 1));
        CHECK_THROWS_AS(batch_step(ptrs, short_actions), LengthMismatch);

        Env done(cfg, map);
        done.reset(1);
        EnvConfig quick = cfg;
        quick.timeout = 1;
        Env finished(quick, map);
        finished.reset(1);
        finished.step(Action{});
        std::vector<Env *> mixed{&done, &finished};
        std::vector<Action> acts(2);
        CHECK_THROWS_AS(batch_step(mixed, acts), SteppingTerminatedEpisode);
        CHECK(done.step_count() == 0);
    }
}

TEST_CASE("config validation") {
    EnvConfig c;
    c.history = 0;
    CHECK_THROWS_AS(c.validate(), InvalidParams);
    c = {};
    c.extrapolation.confidence = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidParams);
    c = {};
    c.goal_radius = 0.0;
    CHECK_THROWS_AS(Env(c, small_map()), InvalidParams);
}
