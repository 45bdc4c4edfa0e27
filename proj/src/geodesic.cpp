#include <cmath>
#include <cstdint>
#include <vector>

#include "bathynav/bathy_map.hpp"

namespace bathynav {

GeodesicField geodesic_field(const DepthMap &map, const Vec2 &goal) {
    const auto cell = map.geometry().try_cell_of(goal);
    if (!cell) { throw GoalUnsafe("goal lies outside the map"); }
    return geodesic_field(map, *cell);
}

namespace {

struct Workspace {
    std::vector<std::uint8_t> open;  // padded grid: 1 = safe and not yet settled
    std::vector<std::int32_t> orth, diag;
    std::vector<double> key;
    std::vector<std::uint32_t> bucket[3];
};

}  // namespace

// Dial's algorithm with unit-width buckets. Keys are path lengths in cells, and every edge is at
// least one cell long, so a bucket's entries are final in any order; edges are at most sqrt(2)
// long, so three rotating buckets hold the whole frontier.
//
// Lengths are tracked as (orthogonal, diagonal) edge counts and compared by o + d*sqrt(2);
// distinct count pairs never tie because sqrt(2) is irrational.
GeodesicField geodesic_field(const DepthMap &map, const CellIndex &goal) {
    const GridGeometry &geo = map.geometry();
    if (!geo.in_grid(goal.row, goal.col) || !map.is_safe(goal)) { throw GoalUnsafe("goal cell is not safe"); }

    thread_local Workspace ws;
    const int pcols = geo.cols + 2;
    const auto pn = std::size_t(geo.rows + 2) * std::size_t(pcols);
    ws.open.assign(pn, 0);
    ws.orth.assign(pn, -1);
    ws.diag.resize(pn);
    ws.key.assign(pn, GeodesicField::unreachable);
    for (auto &b : ws.bucket) { b.clear(); }

    const double *depth = map.depths().data();
    const double limit = map.depth_limit();
    for (int r = 0; r < geo.rows; ++r) {
        const double *row = depth + std::size_t(r) * std::size_t(geo.cols);
        std::uint8_t *dst = ws.open.data() + std::size_t(r + 1) * std::size_t(pcols) + 1;
        for (int c = 0; c < geo.cols; ++c) { dst[c] = row[c] > 0.0 && row[c] < limit; }
    }

    const std::ptrdiff_t step[8] = {-pcols, pcols, -1, 1, -pcols - 1, -pcols + 1, pcols - 1, pcols + 1};
    auto padded = [&](int r, int c) { return std::size_t(r + 1) * std::size_t(pcols) + std::size_t(c + 1); };

    const std::size_t g = padded(goal.row, goal.col);
    ws.orth[g] = 0;
    ws.diag[g] = 0;
    ws.key[g] = 0.0;
    ws.bucket[0].push_back(std::uint32_t(g));

    std::size_t pending = 1;
    for (std::int64_t b = 0; pending > 0; ++b) {
        auto &cur = ws.bucket[b % 3];
        // Entries may be appended to the other two buckets only.
        for (std::size_t k = 0; k < cur.size(); ++k) {
            const std::uint32_t i = cur[k];
            --pending;
            if (!ws.open[i]) { continue; }
            ws.open[i] = 0;
            const std::int32_t o = ws.orth[i], d = ws.diag[i];
            for (int e = 0; e < 8; ++e) {
                const std::size_t j = std::size_t(std::ptrdiff_t(i) + step[e]);
                if (!ws.open[j]) { continue; }
                const bool diagonal = e >= 4;
                const std::int32_t o2 = o + (diagonal ? 0 : 1), d2 = d + (diagonal ? 1 : 0);
                const double k2 = double(o2) + double(d2) * std::numbers::sqrt2;
                if (k2 < ws.key[j]) {
                    ws.key[j] = k2;
                    ws.orth[j] = o2;
                    ws.diag[j] = d2;
                    ws.bucket[std::int64_t(k2) % 3].push_back(std::uint32_t(j));
                    ++pending;
                }
            }
        }
        cur.clear();
    }

    Grid dist(geo.rows, geo.cols);
    for (int r = 0; r < geo.rows; ++r) {
        double *out = dist.data() + std::size_t(r) * std::size_t(geo.cols);
        for (int c = 0; c < geo.cols; ++c) {
            const std::size_t i = padded(r, c);
            out[c] = ws.orth[i] >= 0 ? GeodesicField::lattice_length(ws.orth[i], ws.diag[i], geo.cell_size)
                                     : GeodesicField::unreachable;
        }
    }
    return {geo, goal, std::move(dist)};
}

}  // namespace bathynav
