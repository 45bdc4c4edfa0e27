#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "bathynav/bathy_map.hpp"
#include "bathynav/kernel.hpp"

namespace bathynav {

struct SensorConfig {
    double noise_variance = 0.05 * 0.05;  // sigma_SBES^2
    void validate() const {
        if (!(noise_variance > 0.0)) { throw InvalidParams("sensor noise variance must be positive"); }
    }
};

/// Single-beam echosounder: true depth of the containing cell plus seeded Gaussian noise.
class Sbes {
public:
    Sbes(double noise_variance, std::uint64_t seed) : sigma_(std::sqrt(std::max(noise_variance, 0.0))), rng_(seed) {}

    double measure(const DepthMap &map, const Vec2 &x) {
        const double d = map.lookup_depth(x);
        return d + sigma_ * normal_(rng_);
    }

private:
    double sigma_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// A contiguous run of columns [col_begin, col_end] in one row.
struct RowSpan {
    int row;
    int col_begin;
    int col_end;
};

/// M(x) as row spans: exactly the cells whose centers satisfy k(center, x) > truncation.
void neighborhood_spans(const GridGeometry &geo, const KernelConfig &cfg, const Vec2 &x, std::vector<RowSpan> &out);
std::vector<CellIndex> neighborhood(const GridGeometry &geo, const KernelConfig &cfg, const Vec2 &x);

/// Lattice form of the neighborhood between cell centers, shared by all grids with the same
/// geometry and kernel.
struct NeighborhoodTable {
    int reach = 0;                     // max |offset| along an axis
    std::vector<int> half_width;       // per row offset a in [0, reach]: max |b| with (a, b) inside
    std::vector<double> axis_weight;   // exp(-(a*xi)^2 / (2 l^2)) for a in [0, reach]
    Grid total_mass;                   // per cell: sum of k(center_i, center_k) over the clipped M(center_i)
};

std::shared_ptr<const NeighborhoodTable> neighborhood_table(const GridGeometry &geo, const KernelConfig &cfg);

/// One reading applied to the belief. Real readings carry weight 1 and mark their cell
/// observed; pseudo-observations carry weight alpha < 1 and do not.
struct BeliefUpdate {
    Vec2 position;
    double depth;
    double weight = 1.0;
    bool mark_observed = true;
};

struct DirectionalEstimate {
    double gradient = 0.0;
    double confidence = 0.0;
};

enum Direction : int { Forward = 0, Backward = 1, Left = 2, Right = 3 };

/// Localized GP depth belief on the map grid.
///
/// Each cell carries an independent Gaussian posterior. A reading (x, z) updates every cell of
/// M(x) by the conjugate rule with sensor variance sigma^2 / k(cell, x)^2. In information form
/// (precision 1/var, information mean/var) an update adds k^2/sigma^2 and k^2 z/sigma^2 to the cell.
///
/// The grid is evaluated lazily: update() records the reading, and a query sums the terms of the
/// readings whose neighborhood holds the cell, in reading order. This is the same arithmetic, in
/// the same order, as applying each update to the whole neighborhood when it arrives, so the
/// *_grid() exports (which do exactly that) agree bit for bit with cell queries. An update then
/// costs O(1) and a query O(readings), instead of O(|M(x)|) per update, which matters because a
/// neighborhood spans tens of thousands of cells.
///
/// Confidence at cell i is sum_{j in O} w_j k(c_i, c_j) / sum_{k in M(c_i)} k(c_i, c_k), where O
/// is the set of cells that received a reading and w_j is the largest weight seen in cell j.
/// A cell holding a real reading has confidence 1.
class BeliefGrid {
public:
    BeliefGrid(GridGeometry geometry, KernelConfig kernel, double prior_mean, double prior_variance);

    [[nodiscard]] const GridGeometry &geometry() const { return geometry_; }
    [[nodiscard]] const KernelConfig &kernel_config() const { return kernel_; }
    [[nodiscard]] double prior_mean() const { return prior_mean_; }
    [[nodiscard]] double prior_variance() const { return prior_variance_; }

    void reset();

    void update(const Vec2 &x, double z, double sensor_variance, double weight = 1.0, bool mark_observed = true) {
        const BeliefUpdate u{x, z, weight, mark_observed};
        update(std::span<const BeliefUpdate>(&u, 1), sensor_variance);
    }
    /// Applies the readings in order; all are validated before any is applied.
    void update(std::span<const BeliefUpdate> updates, double sensor_variance);

    [[nodiscard]] double mean(const CellIndex &c) const;
    [[nodiscard]] double variance(const CellIndex &c) const;
    [[nodiscard]] double confidence(const CellIndex &c) const;
    [[nodiscard]] bool observed(const CellIndex &c) const;
    [[nodiscard]] double observed_mass(const CellIndex &c) const;
    [[nodiscard]] double total_mass(const CellIndex &c) const { return table_->total_mass(c.row, c.col); }
    [[nodiscard]] std::size_t reading_count() const { return readings_.size(); }

    /// Overwrites one cell's posterior; later readings apply on top. Meant for seeding tests and
    /// synthetic beliefs.
    void set_posterior(const CellIndex &c, double mean, double variance);

    [[nodiscard]] Grid mean_grid() const;
    [[nodiscard]] Grid variance_grid() const;
    [[nodiscard]] Grid confidence_grid() const;

private:
    struct Sample {
        double x, y, z, inv_noise;
    };
    struct Mark {
        int row, col;
        double weight;
        bool observed;
    };
    struct Override {
        double precision, information;
        std::size_t first_reading;  // readings from this index on apply on top
    };
    struct Posterior {
        double precision, information;
    };

    [[nodiscard]] std::int64_t key(const CellIndex &c) const { return geometry_.linear(c); }
    [[nodiscard]] Posterior posterior(const CellIndex &c) const;
    void scatter(Grid &precision, Grid &information) const;
    [[nodiscard]] const Mark *find_mark(const CellIndex &c) const;

    GridGeometry geometry_;
    KernelConfig kernel_;
    double prior_mean_;
    double prior_variance_;
    double radius2_;
    double inv_length2_;  // 1 / l^2, so k^2 = exp(-d^2 * inv_length2_)
    std::shared_ptr<const NeighborhoodTable> table_;
    std::vector<Sample> readings_;
    std::vector<Mark> marks_;
    std::unordered_map<std::int64_t, std::uint32_t> mark_index_;
    std::unordered_map<std::int64_t, Override> overrides_;
};

struct Reading {
    Vec2 position;
    double depth;
};

struct PseudoObservation {
    Vec2 position;
    double depth;
    double confidence;
};

/// First-order extrapolation ahead of the newest reading along the last displacement:
/// x~ = x1 + step * u, z~ = z1 + step * (z1 - z0) / |x1 - x0|, clamped to [0, max_depth].
/// Throws DegenerateMotion when |x1 - x0| <= min_motion.
PseudoObservation extrapolate(const Reading &prev, const Reading &curr, double step, double confidence,
                              double max_depth, double min_motion = 1e-3);

/// Finite-difference slopes from the current reading to the belief mean one lookahead away in
/// the body-frame forward/backward/left/right directions, with that cell's confidence.
/// Queries that leave the grid yield zeros.
std::array<DirectionalEstimate, 4> directional_gradients(const BeliefGrid &belief, const Vec2 &x, double heading,
                                                         double z, double lookahead);

}  // namespace bathynav
