#include "bathynav/bathy_map.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace bathynav {

namespace {

int axis_cell(double coord, double cell_size, int count) {
    const double t = coord / cell_size;
    const double k = std::round(t);
    int idx;
    // Points on an interior edge go to the lower cell.
    if (std::abs(t - k) <= 1e-9 * std::max(1.0, std::abs(k))) {
        idx = int(k) - 1;
    } else {
        idx = int(std::floor(t));
    }
    return std::clamp(idx, 0, count - 1);
}

int cells_for_extent(double extent, double cell_size, const char *axis) {
    if (!(extent > 0.0) || !std::isfinite(extent)) {
        throw InvalidParams(std::string("extent along ") + axis + " must be positive");
    }
    const double n = extent / cell_size;
    const double rounded = std::round(n);
    if (rounded < 1.0 || std::abs(n - rounded) > 1e-6 * std::max(1.0, rounded)) {
        throw InvalidParams(std::string("extent along ") + axis + " is not a whole number of cells");
    }
    return int(rounded);
}

// Value noise in [-1, 1]: bilinear interpolation with smoothstep weights over a hashed lattice.
class ValueNoise {
public:
    ValueNoise(std::uint64_t seed, int octave) : seed_(derive_seed(seed, 0x6e6f697365ULL, std::uint64_t(octave))) {}

    double operator()(double x, double y) const {
        const double fx = std::floor(x), fy = std::floor(y);
        const auto ix = std::int64_t(fx), iy = std::int64_t(fy);
        const double tx = smooth(x - fx), ty = smooth(y - fy);
        const double v00 = lattice(ix, iy), v10 = lattice(ix + 1, iy);
        const double v01 = lattice(ix, iy + 1), v11 = lattice(ix + 1, iy + 1);
        const double a = v00 + (v10 - v00) * tx;
        const double b = v01 + (v11 - v01) * tx;
        return a + (b - a) * ty;
    }

private:
    static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

    double lattice(std::int64_t ix, std::int64_t iy) const {
        const std::uint64_t h = derive_seed(seed_, std::uint64_t(ix), std::uint64_t(iy));
        return double(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }

    std::uint64_t seed_;
};

// One box-filter pass of the given radius along rows and then columns, edges replicated.
void box_blur(Grid &g, int radius) {
    if (radius <= 0) { return; }
    const int rows = int(g.rows()), cols = int(g.cols());
    const double inv = 1.0 / double(2 * radius + 1);
    std::vector<double> line;
    auto blur_line = [&](auto get, auto set, int n) {
        line.assign(std::size_t(n), 0.0);
        for (int i = 0; i < n; ++i) { line[std::size_t(i)] = get(i); }
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) { acc += line[std::size_t(std::clamp(k, 0, n - 1))]; }
        for (int i = 0; i < n; ++i) {
            set(i, acc * inv);
            acc += line[std::size_t(std::clamp(i + radius + 1, 0, n - 1))];
            acc -= line[std::size_t(std::clamp(i - radius, 0, n - 1))];
        }
    };
    for (int r = 0; r < rows; ++r) {
        blur_line([&](int i) { return g(r, i); }, [&](int i, double v) { g(r, i) = v; }, cols);
    }
    for (int c = 0; c < cols; ++c) {
        blur_line([&](int i) { return g(i, c); }, [&](int i, double v) { g(i, c) = v; }, rows);
    }
}

Grid synthesize(const MapGenParams &p, std::uint64_t seed, const GridGeometry &geo) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double span = std::min(geo.width(), geo.height());
    const Vec2 center(geo.width() * (0.5 + 0.05 * (unit(rng) - 0.5)), geo.height() * (0.5 + 0.05 * (unit(rng) - 0.5)));
    const double basin_radius = span * (0.38 + 0.08 * unit(rng));
    const double base_wavelength = span / 3.0;

    std::vector<ValueNoise> octaves;
    double amp_total = 0.0;
    for (int o = 0; o < p.noise_octaves; ++o) {
        octaves.emplace_back(seed, o);
        amp_total += std::ldexp(1.0, -o);
    }
    const bool use_noise = p.noise_amplitude > 0.0 && !octaves.empty();

    Grid raw(geo.rows, geo.cols);
    for (int r = 0; r < geo.rows; ++r) {
        for (int c = 0; c < geo.cols; ++c) {
            const Vec2 x = geo.center({r, c});
            const double rho = (x - center).norm() / basin_radius;
            double d = p.max_depth * std::clamp(p.radial_gradient_strength * (1.0 - rho), 0.0, 1.0);
            if (rho >= 1.0) {
                // Land keeps descending outward so that noise cannot open water at the map edge.
                d = -p.max_depth * (rho - 1.0);
            }
            if (use_noise) {
                double n = 0.0;
                for (int o = 0; o < int(octaves.size()); ++o) {
                    const double freq = std::ldexp(1.0, o) / base_wavelength;
                    n += std::ldexp(1.0, -o) * octaves[std::size_t(o)](x.x() * freq, x.y() * freq);
                }
                d += p.noise_amplitude * n / amp_total;
            }
            raw(r, c) = d;
        }
    }

    const int radius = int(std::lround(p.smoothing_radius / geo.cell_size));
    if (radius > 0) {
        // Two box passes approximate a Gaussian.
        box_blur(raw, radius);
        box_blur(raw, radius);
    }

    Grid depths(geo.rows, geo.cols);
    for (int r = 0; r < geo.rows; ++r) {
        for (int c = 0; c < geo.cols; ++c) {
            const bool ring = r == 0 || c == 0 || r == geo.rows - 1 || c == geo.cols - 1;
            const double d = ring ? 0.0 : std::clamp(raw(r, c), 0.0, p.max_depth);
            depths(r, c) = double(float(d));
        }
    }
    return depths;
}

}  // namespace

CellIndex GridGeometry::cell_of(const Vec2 &p) const {
    auto c = try_cell_of(p);
    if (!c) { throw OutOfBounds("position outside the grid extent"); }
    return *c;
}

std::optional<CellIndex> GridGeometry::try_cell_of(const Vec2 &p) const {
    if (!contains(p)) { return std::nullopt; }
    return CellIndex{axis_cell(p.y(), cell_size, rows), axis_cell(p.x(), cell_size, cols)};
}

void MapGenParams::validate() const {
    if (radial_gradient_strength < 0.0 || noise_amplitude < 0.0 || smoothing_radius < 0.0 || noise_octaves < 0) {
        throw InvalidParams("generator strengths, amplitudes and radii must be non-negative");
    }
    if (!(max_depth > 0.0)) { throw InvalidParams("max_depth must be positive"); }
    if (target_margin < 0.0) { throw InvalidParams("target_margin must be non-negative"); }
}

DepthMap::DepthMap(GridGeometry geometry, Grid depths, double depth_limit, MapGenParams params)
    : geometry_(geometry), depths_(std::move(depths)), depth_limit_(depth_limit), params_(params) {
    if (geometry_.cols <= 0 || geometry_.rows <= 0 || !(geometry_.cell_size > 0.0)) {
        throw InvalidParams("map geometry must have positive size");
    }
    if (depths_.rows() != geometry_.rows || depths_.cols() != geometry_.cols) {
        throw InvalidParams("depth grid does not match geometry");
    }
    if (!(depth_limit_ > 0.0)) { throw InvalidParams("depth limit must be positive"); }
    if (!depths_.allFinite() || (depths_ < 0.0).any()) {
        throw InvalidParams("depths must be finite and non-negative");
    }
}

ClassMasks DepthMap::classify() const {
    ClassMasks m;
    m.safe = ((depths_ > 0.0) && (depths_ < depth_limit_)).cast<std::uint8_t>();
    m.deep_unsafe = (depths_ >= depth_limit_).cast<std::uint8_t>();
    m.shoreline = (depths_ <= 0.0).cast<std::uint8_t>();
    return m;
}

double DepthMap::clearance(const CellIndex &c, double cap) const {
    const int reach = int(std::ceil(cap / geometry_.cell_size));
    double best2 = cap * cap;
    for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
            const int r = c.row + dr, col = c.col + dc;
            const double d2 = (double(dr) * dr + double(dc) * dc) * geometry_.cell_size * geometry_.cell_size;
            if (d2 >= best2) { continue; }
            // Off-grid counts as unsafe: the world outside the extent is land.
            if (!geometry_.in_grid(r, col) || !is_safe({r, col})) { best2 = d2; }
        }
    }
    return std::sqrt(best2);
}

std::int64_t largest_safe_component(const DepthMap &map) {
    const auto &geo = map.geometry();
    std::vector<std::uint8_t> seen(std::size_t(geo.cell_count()), 0);
    std::vector<CellIndex> stack;
    std::int64_t best = 0;
    for (int r = 0; r < geo.rows; ++r) {
        for (int c = 0; c < geo.cols; ++c) {
            if (seen[std::size_t(geo.linear({r, c}))] || !map.is_safe({r, c})) { continue; }
            std::int64_t size = 0;
            stack.push_back({r, c});
            seen[std::size_t(geo.linear({r, c}))] = 1;
            while (!stack.empty()) {
                const CellIndex cur = stack.back();
                stack.pop_back();
                ++size;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const CellIndex n{cur.row + dr, cur.col + dc};
                        if (!geo.in_grid(n.row, n.col)) { continue; }
                        auto &s = seen[std::size_t(geo.linear(n))];
                        if (s || !map.is_safe(n)) { continue; }
                        s = 1;
                        stack.push_back(n);
                    }
                }
            }
            best = std::max(best, size);
        }
    }
    return best;
}

DepthMap generate_map(const MapGenParams &params, double extent_x, double extent_y, double cell_size,
                      double depth_limit) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) { throw InvalidParams("cell size must be positive"); }
    params.validate();
    if (!(depth_limit > 0.0) || !(depth_limit < params.max_depth)) {
        throw InvalidParams("depth limit must lie in (0, max_depth)");
    }
    GridGeometry geo{cells_for_extent(extent_x, cell_size, "x"), cells_for_extent(extent_y, cell_size, "y"), cell_size};

    constexpr int max_attempts = 100;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const std::uint64_t seed = attempt == 0 ? params.seed : derive_seed(params.seed, 0x7265747279ULL, std::uint64_t(attempt));
        DepthMap map(geo, synthesize(params, seed, geo), depth_limit, params);
        if (10 * largest_safe_component(map) >= geo.cell_count()) { return map; }
    }
    throw GenerationFailed("no admissible map after 100 attempts");
}

}  // namespace bathynav
