#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "bathynav/common.hpp"

namespace bathynav {

/// Regular square-cell grid covering [0, cols*cell_size] x [0, rows*cell_size].
/// Cell (row, col) has its center at ((col + 0.5) * cell_size, (row + 0.5) * cell_size).
struct GridGeometry {
    int cols = 0;
    int rows = 0;
    double cell_size = 0.1;

    [[nodiscard]] double width() const { return cols * cell_size; }
    [[nodiscard]] double height() const { return rows * cell_size; }
    [[nodiscard]] std::int64_t cell_count() const { return std::int64_t(cols) * rows; }

    [[nodiscard]] bool contains(const Vec2 &p) const {
        return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width() && p.y() <= height();
    }
    [[nodiscard]] bool in_grid(int row, int col) const { return row >= 0 && col >= 0 && row < rows && col < cols; }

    /// Containing cell; a point on a shared edge belongs to the lower-index cell. Throws OutOfBounds.
    [[nodiscard]] CellIndex cell_of(const Vec2 &p) const;
    [[nodiscard]] std::optional<CellIndex> try_cell_of(const Vec2 &p) const;

    [[nodiscard]] Vec2 center(const CellIndex &c) const {
        return {(c.col + 0.5) * cell_size, (c.row + 0.5) * cell_size};
    }
    [[nodiscard]] std::int64_t linear(const CellIndex &c) const { return std::int64_t(c.row) * cols + c.col; }

    friend bool operator==(const GridGeometry &, const GridGeometry &) = default;
};

struct MapGenParams {
    std::uint64_t seed = 0;
    double radial_gradient_strength = 1.0;
    double noise_amplitude = 1.0;  // meters
    int noise_octaves = 4;
    double smoothing_radius = 1.0;  // meters, 0 disables
    double max_depth = 6.0;         // meters
    double target_margin = 1.0;     // meters

    void validate() const;
};

enum class CellClass : std::uint8_t { Safe = 0, DeepUnsafe = 1, Shoreline = 2 };

struct ClassMasks {
    MaskGrid safe;
    MaskGrid deep_unsafe;
    MaskGrid shoreline;
};

/// Immutable true-depth grid with its classification threshold.
class DepthMap {
public:
    DepthMap(GridGeometry geometry, Grid depths, double depth_limit, MapGenParams params = {});

    [[nodiscard]] const GridGeometry &geometry() const { return geometry_; }
    [[nodiscard]] const Grid &depths() const { return depths_; }
    [[nodiscard]] double depth_limit() const { return depth_limit_; }
    [[nodiscard]] const MapGenParams &params() const { return params_; }
    [[nodiscard]] double cell_size() const { return geometry_.cell_size; }

    [[nodiscard]] double depth(const CellIndex &c) const { return depths_(c.row, c.col); }
    /// Nearest-cell depth; throws OutOfBounds outside the extent.
    [[nodiscard]] double lookup_depth(const Vec2 &p) const { return depth(geometry_.cell_of(p)); }

    [[nodiscard]] CellClass classify(double d) const {
        if (d <= 0.0) { return CellClass::Shoreline; }
        return d >= depth_limit_ ? CellClass::DeepUnsafe : CellClass::Safe;
    }
    [[nodiscard]] CellClass classify(const CellIndex &c) const { return classify(depth(c)); }
    [[nodiscard]] bool is_safe(const CellIndex &c) const { return classify(c) == CellClass::Safe; }

    [[nodiscard]] ClassMasks classify() const;

    /// Distance (m) from the cell center to the nearest unsafe cell center, capped at `cap`.
    [[nodiscard]] double clearance(const CellIndex &c, double cap) const;

private:
    GridGeometry geometry_;
    Grid depths_;
    double depth_limit_;
    MapGenParams params_;
};

/// Builds a procedural basin: radial ramp from the shoreline to max_depth, value-noise octaves,
/// separable smoothing, and a zero-depth boundary ring. Depths are rounded to float precision so
/// that the on-disk float32 format round-trips bit-exactly.
DepthMap generate_map(const MapGenParams &params, double extent_x, double extent_y, double cell_size,
                      double depth_limit);

/// Size (in cells) of the largest 8-connected component of safe cells.
std::int64_t largest_safe_component(const DepthMap &map);

/// Single-source shortest-path distances to a goal over 8-connected safe cells.
/// Orthogonal edges weigh cell_size, diagonal edges cell_size * sqrt(2).
class GeodesicField {
public:
    static constexpr double unreachable = std::numeric_limits<double>::infinity();

    GeodesicField() = default;
    GeodesicField(GridGeometry geometry, CellIndex goal, Grid distances)
        : geometry_(geometry), goal_(goal), distances_(std::move(distances)) {}

    [[nodiscard]] const GridGeometry &geometry() const { return geometry_; }
    [[nodiscard]] CellIndex goal() const { return goal_; }
    [[nodiscard]] const Grid &distances() const { return distances_; }
    [[nodiscard]] double distance(const CellIndex &c) const { return distances_(c.row, c.col); }
    [[nodiscard]] bool reachable(const CellIndex &c) const { return distance(c) != unreachable; }

    /// Path length for a lattice path with the given edge counts. Shared by every distance this
    /// field stores so that equal paths produce equal bits.
    static double lattice_length(std::int32_t orthogonal, std::int32_t diagonal, double cell_size) {
        return cell_size * (double(orthogonal) + double(diagonal) * std::numbers::sqrt2);
    }

private:
    GridGeometry geometry_;
    CellIndex goal_;
    Grid distances_;
};

GeodesicField geodesic_field(const DepthMap &map, const Vec2 &goal);
GeodesicField geodesic_field(const DepthMap &map, const CellIndex &goal);

}  // namespace bathynav
