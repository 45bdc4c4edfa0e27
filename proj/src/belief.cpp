#include "bathynav/belief.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace bathynav {

namespace {

// Exact membership test for M(x). Far from the boundary the squared distance decides; within a
// relative 1e-9 of it the kernel itself is evaluated so the result matches k(center, x) > delta.
struct MembershipTest {
    const GridGeometry &geo;
    const KernelConfig &cfg;
    Vec2 x;
    double radius2;

    bool operator()(int row, int col) const {
        const Vec2 c = geo.center({row, col});
        const double dx = c.x() - x.x(), dy = c.y() - x.y();
        const double d2 = dx * dx + dy * dy;
        if (std::abs(d2 - radius2) > 1e-9 * radius2) { return d2 < radius2; }
        return kernel(c, x, cfg) > cfg.truncation;
    }
};

}  // namespace

void neighborhood_spans(const GridGeometry &geo, const KernelConfig &cfg, const Vec2 &x, std::vector<RowSpan> &out) {
    out.clear();
    if (!geo.contains(x)) { throw OutOfBounds("neighborhood query outside the grid"); }
    const double radius = cfg.radius();
    const MembershipTest inside{geo, cfg, x, radius * radius};
    const double xi = geo.cell_size;

    const int row_lo = std::max(0, int(std::floor((x.y() - radius) / xi - 0.5)) - 1);
    const int row_hi = std::min(geo.rows - 1, int(std::ceil((x.y() + radius) / xi - 0.5)) + 1);
    const int nearest_col = std::clamp(int(std::floor(x.x() / xi)), 0, geo.cols - 1);

    for (int r = row_lo; r <= row_hi; ++r) {
        const double dy = (r + 0.5) * xi - x.y();
        const double rem = inside.radius2 - dy * dy;
        if (rem < -1e-9 * inside.radius2) { continue; }
        int lo = nearest_col, hi = nearest_col;
        if (rem > 0.0) {
            const double half = std::sqrt(rem);
            lo = std::max(0, int(std::ceil((x.x() - half) / xi - 0.5)));
            hi = std::min(geo.cols - 1, int(std::floor((x.x() + half) / xi - 0.5)));
            if (lo > hi) { lo = hi = nearest_col; }
        }
        while (lo <= hi && !inside(r, lo)) { ++lo; }
        while (hi >= lo && !inside(r, hi)) { --hi; }
        if (lo > hi) { continue; }
        while (lo > 0 && inside(r, lo - 1)) { --lo; }
        while (hi < geo.cols - 1 && inside(r, hi + 1)) { ++hi; }
        out.push_back({r, lo, hi});
    }
}

std::vector<CellIndex> neighborhood(const GridGeometry &geo, const KernelConfig &cfg, const Vec2 &x) {
    std::vector<RowSpan> spans;
    neighborhood_spans(geo, cfg, x, spans);
    std::vector<CellIndex> cells;
    for (const auto &s : spans) {
        for (int c = s.col_begin; c <= s.col_end; ++c) { cells.push_back({s.row, c}); }
    }
    return cells;
}

namespace {

std::shared_ptr<const NeighborhoodTable> build_table(const GridGeometry &geo, const KernelConfig &cfg) {
    auto t = std::make_shared<NeighborhoodTable>();
    const double xi = geo.cell_size;
    const double inv2l2 = 1.0 / (2.0 * cfg.length_scale * cfg.length_scale);
    auto inside = [&](int a, int b) {
        const Vec2 d(a * xi, b * xi);
        return std::exp(-d.squaredNorm() * inv2l2) > cfg.truncation;
    };

    int reach = 0;
    while (inside(reach + 1, 0)) { ++reach; }
    t->reach = reach;
    t->half_width.resize(std::size_t(reach) + 1);
    t->axis_weight.resize(std::size_t(reach) + 1);
    for (int a = 0; a <= reach; ++a) {
        int w = reach;
        while (w > 0 && !inside(a, w)) { --w; }
        t->half_width[std::size_t(a)] = w;
        t->axis_weight[std::size_t(a)] = std::exp(-(a * xi) * (a * xi) * inv2l2);
    }

    // prefix[b + reach + 1] = sum of axis weights for offsets -reach..b
    std::vector<double> prefix(std::size_t(2 * reach + 2), 0.0);
    for (int b = -reach; b <= reach; ++b) {
        prefix[std::size_t(b + reach + 1)] = prefix[std::size_t(b + reach)] + t->axis_weight[std::size_t(std::abs(b))];
    }
    auto range_sum = [&](int lo, int hi) { return prefix[std::size_t(hi + reach + 1)] - prefix[std::size_t(lo + reach)]; };

    t->total_mass.resize(geo.rows, geo.cols);
    for (int r = 0; r < geo.rows; ++r) {
        for (int c = 0; c < geo.cols; ++c) {
            double total = 0.0;
            const int a_lo = std::max(-reach, -r), a_hi = std::min(reach, geo.rows - 1 - r);
            for (int a = a_lo; a <= a_hi; ++a) {
                const int w = t->half_width[std::size_t(std::abs(a))];
                const int b_lo = std::max(-w, -c), b_hi = std::min(w, geo.cols - 1 - c);
                total += t->axis_weight[std::size_t(std::abs(a))] * range_sum(b_lo, b_hi);
            }
            t->total_mass(r, c) = total;
        }
    }
    return t;
}

}  // namespace

std::shared_ptr<const NeighborhoodTable> neighborhood_table(const GridGeometry &geo, const KernelConfig &cfg) {
    using Key = std::tuple<int, int, double, double, double>;
    static std::mutex mutex;
    static std::map<Key, std::shared_ptr<const NeighborhoodTable>> cache;

    cfg.validate();
    const Key key{geo.rows, geo.cols, geo.cell_size, cfg.length_scale, cfg.truncation};
    std::lock_guard lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) { return it->second; }
    auto table = build_table(geo, cfg);
    cache.emplace(key, table);
    return table;
}

namespace {

// Conjugate-update weight k^2 of a reading at squared distance d2. Both the cell queries and the
// grid exports go through this, so they produce identical bits.
inline double weight2(double d2, double inv_length2) { return std::exp(-d2 * inv_length2); }

}  // namespace

BeliefGrid::BeliefGrid(GridGeometry geometry, KernelConfig kernel, double prior_mean, double prior_variance)
    : geometry_(geometry), kernel_(kernel), prior_mean_(prior_mean), prior_variance_(prior_variance) {
    kernel_.validate();
    if (!(prior_variance_ > 0.0) || !std::isfinite(prior_mean_)) {
        throw InvalidParams("belief prior needs a finite mean and positive variance");
    }
    radius2_ = kernel_.radius() * kernel_.radius();
    inv_length2_ = 1.0 / (kernel_.length_scale * kernel_.length_scale);
    table_ = neighborhood_table(geometry_, kernel_);
}

void BeliefGrid::reset() {
    readings_.clear();
    marks_.clear();
    mark_index_.clear();
    overrides_.clear();
}

void BeliefGrid::update(std::span<const BeliefUpdate> updates, double sensor_variance) {
    if (!(sensor_variance > 0.0)) { throw InvalidParams("sensor variance must be positive"); }
    for (const auto &u : updates) {
        if (!geometry_.contains(u.position)) { throw OutOfBounds("reading outside the grid"); }
        if (!std::isfinite(u.depth) || !std::isfinite(u.weight)) { throw NonFinite("reading is not finite"); }
    }
    const double inv_noise = 1.0 / sensor_variance;
    for (const auto &u : updates) {
        readings_.push_back({u.position.x(), u.position.y(), u.depth, inv_noise});

        // O is a set of cells: a cell contributes once, at the largest weight it has received.
        const CellIndex cell = geometry_.cell_of(u.position);
        const double w = std::clamp(u.weight, 0.0, 1.0);
        auto [it, fresh] = mark_index_.try_emplace(key(cell), std::uint32_t(marks_.size()));
        if (fresh) {
            marks_.push_back({cell.row, cell.col, w, u.mark_observed});
        } else {
            Mark &m = marks_[it->second];
            m.weight = std::max(m.weight, w);
            m.observed = m.observed || u.mark_observed;
        }
    }
}

BeliefGrid::Posterior BeliefGrid::posterior(const CellIndex &c) const {
    const double prior_precision = 1.0 / prior_variance_;
    Posterior p{prior_precision, prior_precision * prior_mean_};
    std::size_t first = 0;
    if (!overrides_.empty()) {
        if (auto it = overrides_.find(key(c)); it != overrides_.end()) {
            p = {it->second.precision, it->second.information};
            first = it->second.first_reading;
        }
    }
    const Vec2 center = geometry_.center(c);
    const double band = 1e-9 * radius2_;
    for (std::size_t i = first; i < readings_.size(); ++i) {
        const Sample &s = readings_[i];
        const double dx = center.x() - s.x, dy = center.y() - s.y;
        const double d2 = dx * dx + dy * dy;
        // Same decision as neighborhood_spans().
        const bool inside = std::abs(d2 - radius2_) > band ? d2 < radius2_
                                                           : kernel(center, Vec2(s.x, s.y), kernel_) > kernel_.truncation;
        if (!inside) { continue; }
        const double g = weight2(d2, inv_length2_) * s.inv_noise;
        p.precision += g;
        p.information += g * s.z;
    }
    return p;
}

double BeliefGrid::mean(const CellIndex &c) const {
    const Posterior p = posterior(c);
    return p.information / p.precision;
}

double BeliefGrid::variance(const CellIndex &c) const { return 1.0 / posterior(c).precision; }

const BeliefGrid::Mark *BeliefGrid::find_mark(const CellIndex &c) const {
    auto it = mark_index_.find(key(c));
    return it == mark_index_.end() ? nullptr : &marks_[it->second];
}

bool BeliefGrid::observed(const CellIndex &c) const {
    const Mark *m = find_mark(c);
    return m && m->observed;
}

double BeliefGrid::observed_mass(const CellIndex &c) const {
    const NeighborhoodTable &t = *table_;
    double mass = 0.0;
    for (const Mark &m : marks_) {
        const int a = std::abs(m.row - c.row), b = std::abs(m.col - c.col);
        if (a > t.reach || b > t.half_width[std::size_t(a)]) { continue; }
        mass += m.weight * (t.axis_weight[std::size_t(a)] * t.axis_weight[std::size_t(b)]);
    }
    return mass;
}

double BeliefGrid::confidence(const CellIndex &c) const {
    if (observed(c)) { return 1.0; }
    return std::min(1.0, observed_mass(c) / table_->total_mass(c.row, c.col));
}

void BeliefGrid::set_posterior(const CellIndex &c, double mean, double variance) {
    if (!geometry_.in_grid(c.row, c.col)) { throw OutOfBounds("cell outside the grid"); }
    if (!(variance > 0.0) || !std::isfinite(mean)) { throw InvalidParams("posterior needs finite mean and positive variance"); }
    overrides_[key(c)] = {1.0 / variance, mean / variance, readings_.size()};
}

void BeliefGrid::scatter(Grid &precision, Grid &information) const {
    const double prior_precision = 1.0 / prior_variance_;
    precision = Grid::Constant(geometry_.rows, geometry_.cols, prior_precision);
    information = Grid::Constant(geometry_.rows, geometry_.cols, prior_precision * prior_mean_);

    // Overrides take effect just before the reading they were set ahead of.
    std::vector<std::pair<std::size_t, std::int64_t>> pending;
    for (const auto &[k, o] : overrides_) { pending.emplace_back(o.first_reading, k); }
    std::sort(pending.begin(), pending.end());
    auto apply_overrides = [&](std::size_t upto, std::size_t &next) {
        for (; next < pending.size() && pending[next].first <= upto; ++next) {
            const Override &o = overrides_.at(pending[next].second);
            precision.data()[pending[next].second] = o.precision;
            information.data()[pending[next].second] = o.information;
        }
    };

    std::size_t next = 0;
    std::vector<RowSpan> spans;
    for (std::size_t i = 0; i < readings_.size(); ++i) {
        apply_overrides(i, next);
        const Sample &s = readings_[i];
        const Vec2 x(s.x, s.y);
        neighborhood_spans(geometry_, kernel_, x, spans);
        for (const RowSpan &span : spans) {
            double *prec = precision.data() + std::size_t(span.row) * std::size_t(geometry_.cols);
            double *info = information.data() + std::size_t(span.row) * std::size_t(geometry_.cols);
            for (int col = span.col_begin; col <= span.col_end; ++col) {
                const Vec2 center = geometry_.center({span.row, col});
                const double dx = center.x() - s.x, dy = center.y() - s.y;
                const double g = weight2(dx * dx + dy * dy, inv_length2_) * s.inv_noise;
                prec[col] += g;
                info[col] += g * s.z;
            }
        }
    }
    apply_overrides(readings_.size(), next);
}

Grid BeliefGrid::mean_grid() const {
    Grid precision, information;
    scatter(precision, information);
    return information / precision;
}

Grid BeliefGrid::variance_grid() const {
    Grid precision, information;
    scatter(precision, information);
    return precision.inverse();
}

Grid BeliefGrid::confidence_grid() const {
    const NeighborhoodTable &t = *table_;
    Grid mass = Grid::Zero(geometry_.rows, geometry_.cols);
    for (const Mark &m : marks_) {
        for (int a = -t.reach; a <= t.reach; ++a) {
            const int r = m.row + a;
            if (r < 0 || r >= geometry_.rows) { continue; }
            const int w = t.half_width[std::size_t(std::abs(a))];
            const double ka = t.axis_weight[std::size_t(std::abs(a))];
            for (int col = std::max(0, m.col - w); col <= std::min(geometry_.cols - 1, m.col + w); ++col) {
                mass(r, col) += m.weight * (ka * t.axis_weight[std::size_t(std::abs(col - m.col))]);
            }
        }
    }
    Grid out(geometry_.rows, geometry_.cols);
    for (int r = 0; r < geometry_.rows; ++r) {
        for (int c = 0; c < geometry_.cols; ++c) {
            out(r, c) = observed({r, c}) ? 1.0 : std::min(1.0, mass(r, c) / t.total_mass(r, c));
        }
    }
    return out;
}

PseudoObservation extrapolate(const Reading &prev, const Reading &curr, double step, double confidence,
                              double max_depth, double min_motion) {
    const Vec2 delta = curr.position - prev.position;
    const double dist = delta.norm();
    if (!(dist > min_motion)) { throw DegenerateMotion("displacement too small to extrapolate"); }
    if (!(step > 0.0)) { throw InvalidParams("extrapolation step must be positive"); }
    const Vec2 dir = delta / dist;
    const double z = curr.depth + step * (curr.depth - prev.depth) / dist;
    return {curr.position + step * dir, std::clamp(z, 0.0, max_depth), confidence};
}

std::array<DirectionalEstimate, 4> directional_gradients(const BeliefGrid &belief, const Vec2 &x, double heading,
                                                         double z, double lookahead) {
    const double c = std::cos(heading), s = std::sin(heading);
    const std::array<Vec2, 4> dirs{Vec2(c, s), Vec2(-c, -s), Vec2(-s, c), Vec2(s, -c)};
    std::array<DirectionalEstimate, 4> out{};
    for (std::size_t m = 0; m < 4; ++m) {
        const Vec2 q = x + lookahead * dirs[m];
        const auto cell = belief.geometry().try_cell_of(q);
        if (!cell) { continue; }
        const double dist = (q - x).norm();
        if (!(dist > 0.0)) { continue; }
        out[m] = {(belief.mean(*cell) - z) / dist, belief.confidence(*cell)};
    }
    return out;
}

}  // namespace bathynav
