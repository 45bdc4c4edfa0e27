#include <doctest.h>

#include <random>

#include "bathynav/bathy_map.hpp"
#include "oracles.hpp"

using namespace bathynav;

namespace {

DepthMap flat_map(int rows, int cols, double depth = 1.0, double cell = 0.1) {
    return DepthMap(GridGeometry{cols, rows, cell}, Grid::Constant(rows, cols, depth), 2.0);
}

DepthMap random_map(std::mt19937_64 &rng, int rows, int cols, double unsafe_fraction) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Grid d(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double p = u(rng);
            d(r, c) = p < unsafe_fraction / 2 ? 0.0 : p < unsafe_fraction ? 2.5 : 1.0;
        }
    }
    return DepthMap(GridGeometry{cols, rows, 0.1}, d, 2.0);
}

}  // namespace

TEST_CASE("generated map has the requested size and a dry boundary ring") {
    MapGenParams p;
    p.seed = 7;
    const DepthMap m = generate_map(p, 50.0, 50.0, 0.10, 2.0);
    CHECK(m.geometry().cols == 500);
    CHECK(m.geometry().rows == 500);
    const Grid &d = m.depths();
    CHECK((d.row(0) == 0.0).all());
    CHECK((d.row(499) == 0.0).all());
    CHECK((d.col(0) == 0.0).all());
    CHECK((d.col(499) == 0.0).all());
    CHECK(d.allFinite());
    CHECK((d >= 0.0).all());
    CHECK(10 * largest_safe_component(m) >= m.geometry().cell_count());
}

TEST_CASE("map generation is deterministic") {
    MapGenParams p;
    p.seed = 11;
    const DepthMap a = generate_map(p, 20.0, 30.0, 0.1, 2.0);
    const DepthMap b = generate_map(p, 20.0, 30.0, 0.1, 2.0);
    CHECK((a.depths() == b.depths()).all());
    p.seed = 12;
    const DepthMap c = generate_map(p, 20.0, 30.0, 0.1, 2.0);
    CHECK_FALSE((a.depths() == c.depths()).all());
}

TEST_CASE("noise-free generator gives a radial ramp and an annular safe band") {
    MapGenParams p;
    p.seed = 3;
    p.noise_amplitude = 0.0;
    p.smoothing_radius = 0.0;
    const DepthMap m = generate_map(p, 30.0, 30.0, 0.1, 2.0);
    const Grid &d = m.depths();
    Eigen::Index r0, c0;
    d.maxCoeff(&r0, &c0);
    CHECK(d(r0, c0) == doctest::Approx(p.max_depth).epsilon(0.01));

    // Depth never increases walking outward from the basin center along the four axes.
    const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto &dir : dirs) {
        int r = int(r0), c = int(c0);
        while (m.geometry().in_grid(r + dir[0], c + dir[1])) {
            CHECK(d(r + dir[0], c + dir[1]) <= d(r, c));
            r += dir[0];
            c += dir[1];
        }
    }

    // Safe cells form one ring: deep center, shallow outside.
    const ClassMasks masks = m.classify();
    CHECK(masks.deep_unsafe(r0, c0) == 1);
    CHECK(masks.shoreline(0, 0) == 1);
    CHECK(masks.safe.cast<int>().sum() == largest_safe_component(m));
}

TEST_CASE("generator rejects bad parameters") {
    MapGenParams p;
    CHECK_THROWS_AS(generate_map(p, 50.0, 50.0, 0.0, 2.0), InvalidParams);
    CHECK_THROWS_AS(generate_map(p, -5.0, 50.0, 0.1, 2.0), InvalidParams);
    CHECK_THROWS_AS(generate_map(p, 50.05, 50.0, 0.1, 2.0), InvalidParams);
    CHECK_THROWS_AS(generate_map(p, 50.0, 50.0, 0.1, 7.0), InvalidParams);
    p.noise_amplitude = -1.0;
    CHECK_THROWS_AS(generate_map(p, 50.0, 50.0, 0.1, 2.0), InvalidParams);

    MapGenParams dry;
    dry.radial_gradient_strength = 0.0;
    dry.noise_amplitude = 0.0;
    CHECK_THROWS_AS(generate_map(dry, 5.0, 5.0, 0.1, 2.0), GenerationFailed);
}

TEST_CASE("classification uses a closed depth threshold") {
    Grid d(1, 4);
    d << 2.0, 1.0, 0.0, 3.0;
    const DepthMap m(GridGeometry{4, 1, 0.1}, d, 2.0);
    CHECK(m.classify({0, 0}) == CellClass::DeepUnsafe);
    CHECK(m.classify({0, 1}) == CellClass::Safe);
    CHECK(m.classify({0, 2}) == CellClass::Shoreline);
    CHECK(m.classify({0, 3}) == CellClass::DeepUnsafe);

    MapGenParams p;
    p.seed = 5;
    const DepthMap g = generate_map(p, 20.0, 20.0, 0.1, 2.0);
    const ClassMasks k = g.classify();
    const auto total = k.safe.cast<int>() + k.deep_unsafe.cast<int>() + k.shoreline.cast<int>();
    CHECK((total == 1).all());
}

TEST_CASE("depth lookup is nearest-cell with lower-index ties") {
    Grid d(2, 2);
    d << 1.7, 0.4, 0.9, 1.2;
    const DepthMap m(GridGeometry{2, 2, 0.1}, d, 2.0);
    CHECK(m.lookup_depth({0.05, 0.05}) == 1.7);
    CHECK(m.lookup_depth({0.05 + 0.04, 0.05}) == 1.7);
    CHECK(m.lookup_depth({0.05, 0.05 + 0.04}) == 1.7);
    CHECK(m.lookup_depth({0.1, 0.05}) == 1.7);
    CHECK(m.lookup_depth({0.1, 0.1}) == 1.7);
    CHECK(m.lookup_depth({0.11, 0.05}) == 0.4);
    CHECK(m.lookup_depth({0.15, 0.15}) == 1.2);
    CHECK(m.lookup_depth({0.0, 0.0}) == 1.7);
    CHECK(m.lookup_depth({0.2, 0.2}) == 1.2);
    CHECK_THROWS_AS((void)m.lookup_depth({0.21, 0.1}), OutOfBounds);
    CHECK_THROWS_AS((void)m.lookup_depth({-0.01, 0.1}), OutOfBounds);
}

TEST_CASE("depth map validates its grid") {
    CHECK_THROWS_AS(DepthMap(GridGeometry{2, 2, 0.1}, Grid::Constant(2, 2, -1.0), 2.0), InvalidParams);
    CHECK_THROWS_AS(DepthMap(GridGeometry{2, 2, 0.1}, Grid::Constant(2, 3, 1.0), 2.0), InvalidParams);
    Grid nan = Grid::Constant(2, 2, 1.0);
    nan(1, 1) = std::nan("");
    CHECK_THROWS_AS(DepthMap(GridGeometry{2, 2, 0.1}, nan, 2.0), InvalidParams);
}

TEST_CASE("geodesic field basics") {
    const DepthMap m = flat_map(10, 10);
    const GeodesicField f = geodesic_field(m, CellIndex{4, 4});
    CHECK(f.distance({4, 4}) == 0.0);
    CHECK(f.distance({4, 5}) == doctest::Approx(0.1));
    CHECK(f.distance({3, 4}) == doctest::Approx(0.1));
    CHECK(f.distance({5, 5}) == doctest::Approx(0.1 * std::sqrt(2.0)));
    CHECK(f.distance({4, 9}) == doctest::Approx(0.5));

    const GeodesicField fw = geodesic_field(m, Vec2(0.45, 0.45));
    CHECK(fw.goal() == CellIndex{4, 4});

    Grid d = Grid::Constant(5, 5, 1.0);
    d(2, 2) = 0.0;
    const DepthMap holed(GridGeometry{5, 5, 0.1}, d, 2.0);
    CHECK_THROWS_AS(geodesic_field(holed, CellIndex{2, 2}), GoalUnsafe);
    CHECK_THROWS_AS(geodesic_field(holed, Vec2(9.0, 9.0)), GoalUnsafe);
    const GeodesicField fh = geodesic_field(holed, CellIndex{0, 0});
    CHECK_FALSE(fh.reachable({2, 2}));
}

TEST_CASE("geodesic field matches brute force on an all-safe grid") {
    const DepthMap m = flat_map(10, 10);
    for (int r = 0; r < 10; ++r) {
        for (int c = 0; c < 10; ++c) {
            const GeodesicField f = geodesic_field(m, CellIndex{r, c});
            CHECK((f.distances() == oracle::geodesic(m, {r, c})).all());
        }
    }
}

TEST_CASE("geodesic field matches brute force on random obstacle grids") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> size(2, 20);
    int compared = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const DepthMap m = random_map(rng, size(rng), size(rng), 0.35);
        const auto &g = m.geometry();
        for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) {
                if (!m.is_safe({r, c}) || (r * 7 + c) % 5 != 0) { continue; }
                const GeodesicField f = geodesic_field(m, CellIndex{r, c});
                const Grid ref = oracle::geodesic(m, {r, c});
                CHECK((f.distances() == ref).all());
                ++compared;

                // Neighboring reachable cells differ by at most one edge.
                for (int rr = 0; rr < g.rows; ++rr) {
                    for (int cc = 0; cc + 1 < g.cols; ++cc) {
                        if (f.reachable({rr, cc}) && f.reachable({rr, cc + 1})) {
                            CHECK(std::abs(f.distance({rr, cc}) - f.distance({rr, cc + 1})) <= 0.1 + 1e-12);
                        }
                    }
                }
            }
        }
    }
    CHECK(compared > 100);
}
