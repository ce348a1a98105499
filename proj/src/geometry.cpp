#include "nnlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace nnlab {
namespace {

// Uniform grid over the domain for neighbor candidate lookups; 21 bits
// per axis, up to 3 axes.
class BucketGrid {
public:
    BucketGrid(const MetricSpace& space, double h) : space_(&space), h_(h) {
        if (!(h > 0.0)) throw std::invalid_argument("grid cell size must be positive");
        if (space.dim > 3) throw std::invalid_argument("grid supports dim <= 3");
    }

    std::int64_t coord(const Point& x, int axis) const {
        double t = std::floor((x[axis] - space_->domain.lo[axis]) / h_);
        if (t < 0.0) t = 0.0;
        if (t > 2000000.0) t = 2000000.0;
        return static_cast<std::int64_t>(t);
    }

    std::uint64_t key_of(const std::vector<std::int64_t>& c) const {
        std::uint64_t key = 0;
        for (std::size_t i = 0; i < c.size(); ++i)
            key |= static_cast<std::uint64_t>(c[i] & ((1 << 21) - 1)) << (21 * i);
        return key;
    }

    std::vector<std::int64_t> cell_of(const Point& x) const {
        std::vector<std::int64_t> c(space_->dim);
        for (int i = 0; i < space_->dim; ++i) c[i] = coord(x, i);
        return c;
    }

    void add(const Point& x, int idx) { cells_[key_of(cell_of(x))].push_back(idx); }

    // Visit indices in all cells with Chebyshev ring index exactly `ring`
    // around x's cell.
    template <typename F>
    void for_ring(const Point& x, std::int64_t ring, F&& visit) const {
        std::vector<std::int64_t> base = cell_of(x);
        std::vector<std::int64_t> c(base.size());
        visit_rec(base, c, 0, ring, false, visit);
    }

    bool empty() const { return cells_.empty(); }

private:
    template <typename F>
    void visit_rec(const std::vector<std::int64_t>& base, std::vector<std::int64_t>& c,
                   std::size_t axis, std::int64_t ring, bool on_ring, F&& visit) const {
        if (axis == c.size()) {
            if (ring == 0 || on_ring) {
                auto it = cells_.find(key_of(c));
                if (it != cells_.end())
                    for (int idx : it->second) visit(idx);
            }
            return;
        }
        for (std::int64_t d = -ring; d <= ring; ++d) {
            std::int64_t v = base[axis] + d;
            if (v < 0) continue;
            c[axis] = v;
            visit_rec(base, c, axis + 1, ring, on_ring || std::llabs(d) == ring, visit);
        }
    }

    const MetricSpace* space_;
    double h_;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

// Greedy net: indices of centers such that all points are within r of a
// center and centers are pairwise > r apart.
std::vector<int> net_points(const MetricSpace& space, const std::vector<Point>& pts, double r) {
    BucketGrid grid(space, r);
    std::vector<int> centers;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool covered = false;
        grid.for_ring(pts[i], 0, [&](int idx) {
            if (!covered && distance(space, pts[i], pts[idx]) <= r) covered = true;
        });
        if (!covered)
            grid.for_ring(pts[i], 1, [&](int idx) {
                if (!covered && distance(space, pts[i], pts[idx]) <= r) covered = true;
            });
        if (!covered) {
            centers.push_back(static_cast<int>(i));
            grid.add(pts[i], static_cast<int>(i));
        }
    }
    return centers;
}

// Min distance from x to indexed points, scanning grid rings outward
// until the remaining cells cannot improve. `h` is the grid cell size.
double grid_min_dist(const MetricSpace& space, const BucketGrid& grid, double h,
                     const std::vector<Point>& pts, const Point& x, int skip_idx,
                     std::int64_t max_ring) {
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
        if (best <= static_cast<double>(ring) * h) break;
        grid.for_ring(x, ring, [&](int idx) {
            if (idx == skip_idx) return;
            double d = distance(space, x, pts[idx]);
            if (d < best) best = d;
        });
    }
    return best;
}

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::size_t n = xs.size();
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

long net_cover_count(const MetricSpace& space, const std::vector<Point>& pts, double r) {
    return static_cast<long>(net_points(space, pts, r).size());
}

double median_nn_spacing(const MetricSpace& space, const std::vector<Point>& pts, int cap) {
    std::size_t n = pts.size();
    if (n < 2) return 0.0;
    double diam = space.diameter();
    double cells_per_axis =
        std::clamp(std::pow(static_cast<double>(n), 1.0 / space.dim), 8.0, 1024.0);
    double h = diam / cells_per_axis;
    BucketGrid grid(space, h);
    for (std::size_t i = 0; i < n; ++i) grid.add(pts[i], static_cast<int>(i));
    std::int64_t max_ring = static_cast<std::int64_t>(std::ceil(diam / h)) + 1;

    std::size_t queries = std::min<std::size_t>(static_cast<std::size_t>(cap), n);
    std::size_t stride = n / queries;
    std::vector<double> spacings;
    spacings.reserve(queries);
    for (std::size_t q = 0; q < queries; ++q) {
        std::size_t i = q * stride;
        double d = grid_min_dist(space, grid, h, pts, pts[i], static_cast<int>(i), max_ring);
        if (std::isfinite(d)) spacings.push_back(d);
    }
    if (spacings.empty()) return 0.0;
    std::size_t mid = spacings.size() / 2;
    std::nth_element(spacings.begin(), spacings.begin() + mid, spacings.end());
    return spacings[mid];
}

BoxDimensionEstimate box_dimension_estimate(const MetricSpace& space,
                                            const std::vector<Point>& pts, int j_min, int j_max) {
    if (j_min < 0 || j_max < j_min) throw std::invalid_argument("bad radius schedule");
    BoxDimensionEstimate est;
    if (pts.empty()) {
        est.note = "empty sample";
        return est;
    }
    double cutoff = 3.0 * median_nn_spacing(space, pts);
    for (int j = j_min; j <= j_max; ++j) {
        double r = std::ldexp(1.0, -j);
        if (r < cutoff && est.radii.size() >= 2) {
            est.truncated = true;
            est.note = "schedule truncated: sample too sparse below r = " + std::to_string(r);
            break;
        }
        est.radii.push_back(r);
        est.counts.push_back(net_cover_count(space, pts, r));
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < est.radii.size(); ++i) {
        xs.push_back(std::log(1.0 / est.radii[i]));
        ys.push_back(std::log(static_cast<double>(est.counts[i])));
    }
    est.slope = least_squares_slope(xs, ys);
    return est;
}

MinkowskiEstimate minkowski_content_estimate(const MetricSpace& space,
                                             const std::vector<Point>& boundary,
                                             const ReferenceMeasure& measure, int j_min, int j_max,
                                             long mc_samples, std::uint64_t seed) {
    if (j_min < 0 || j_max < j_min) throw std::invalid_argument("bad radius schedule");
    MinkowskiEstimate est;
    if (boundary.empty()) {
        est.exact = true;
        est.note = "empty boundary";
        return est;
    }

    if (space.dim == 1) {
        est.exact = true;
        for (int j = j_min; j <= j_max; ++j) {
            double r = std::ldexp(1.0, -j);
            std::vector<Ball> balls;
            balls.reserve(boundary.size());
            for (const Point& p : boundary) balls.push_back(Ball{p, r});
            double mass = measure.mass_of_ball_union(balls).value;
            est.radii.push_back(r);
            est.values.push_back(mass / r);
            est.stderrs.push_back(0.0);
        }
        est.r_used = est.radii.back();
        est.content = est.values.back();
        return est;
    }

    // Fixed Monte Carlo sample reused across radii, so the per-r curve is
    // monotone by construction.
    Rng rng(derive_seed(seed, 1, 0));
    std::vector<Point> mc(static_cast<std::size_t>(mc_samples));
    for (auto& x : mc) x = measure.sample(rng);

    for (int j = j_min; j <= j_max; ++j) {
        double r = std::ldexp(1.0, -j);
        double q = 0.25 * r;  // net resolution: dist(x, net) - q <= dist(x, boundary)
        std::vector<int> net = net_points(space, boundary, q);
        BucketGrid net_grid(space, r);
        for (int idx : net) net_grid.add(boundary[idx], idx);
        BucketGrid all_grid(space, r);
        for (std::size_t i = 0; i < boundary.size(); ++i)
            all_grid.add(boundary[i], static_cast<int>(i));

        long hits = 0;
        for (const Point& x : mc) {
            double dnet = std::numeric_limits<double>::infinity();
            for (std::int64_t ring = 0; ring <= 2; ++ring) {
                if (dnet <= static_cast<double>(ring) * r) break;
                net_grid.for_ring(x, ring, [&](int idx) {
                    double d = distance(space, x, boundary[idx]);
                    if (d < dnet) dnet = d;
                });
            }
            bool hit;
            if (dnet <= r) {
                hit = true;
            } else if (dnet > r + q) {
                hit = false;
            } else {
                // Ambiguous band: settle against the full boundary sample.
                hit = false;
                for (std::int64_t ring = 0; ring <= 1 && !hit; ++ring)
                    all_grid.for_ring(x, ring, [&](int idx) {
                        if (!hit && distance(space, x, boundary[idx]) <= r) hit = true;
                    });
            }
            if (hit) ++hits;
        }
        double p = static_cast<double>(hits) / static_cast<double>(mc_samples);
        double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(mc_samples));
        est.radii.push_back(r);
        est.values.push_back(p / r);
        est.stderrs.push_back(se / r);
    }

    // Smallest radius whose Monte Carlo error is under 5% of the value.
    int pick = -1;
    for (int i = static_cast<int>(est.radii.size()) - 1; i >= 0; --i) {
        if (est.values[i] > 0.0 && est.stderrs[i] < 0.05 * est.values[i]) {
            pick = i;
            break;
        }
    }
    if (pick < 0) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < est.radii.size(); ++i) {
            double rel = est.values[i] > 0.0 ? est.stderrs[i] / est.values[i] : best;
            if (rel < best) {
                best = rel;
                pick = static_cast<int>(i);
            }
        }
        est.note = "no radius met the 5% reliability target";
        if (pick < 0) pick = static_cast<int>(est.radii.size()) - 1;
    }
    est.r_used = est.radii[pick];
    est.content = est.values[pick];
    return est;
}

double rate_curve_rstar(double N, const RateCurveParams& prm) {
    double expo = prm.b_hat + prm.c1;
    double base = prm.C * expo * prm.sigma / (N * (prm.m_hat + prm.c2));
    return std::pow(base, 1.0 / (expo + 1.0));
}

double rate_curve_bound(double N, const RateCurveParams& prm) {
    if (!(N >= 1.0)) throw std::invalid_argument("N must be >= 1");
    if (!(prm.sigma > 0.0 && prm.b_hat >= 0.0 && prm.b_hat + prm.c1 > 0.0 &&
          prm.m_hat >= 0.0 && prm.C > 0.0 && prm.r0 > 0.0 && prm.p > 0.0))
        throw std::invalid_argument("rate curve parameters must be positive");
    auto eps = [&](double delta) {
        return std::min(1.0, std::pow(std::max(delta, 0.0) / prm.sigma, prm.alpha));
    };
    double azuma = std::sqrt(2.0 * N * std::log(2.0 * N / prm.p));
    double expo = prm.b_hat + prm.c1;
    auto term = [&](double r) { return prm.C * std::pow(r, -expo) + N * eps((prm.m_hat + prm.c2) * r); };

    double best = term(std::min(prm.r0, rate_curve_rstar(N, prm)));
    for (double r = prm.r0; r > 1e-9; r *= std::pow(0.5, 0.25)) best = std::min(best, term(r));
    return std::min(N, best + azuma);
}

double fit_rate_constant(const std::vector<double>& radii, const std::vector<double>& counts,
                         double exponent) {
    if (radii.size() != counts.size() || radii.empty())
        throw std::invalid_argument("mismatched fit inputs");
    double C = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i)
        C = std::max(C, counts[i] * std::pow(radii[i], exponent));
    return C;
}

ExpansionCheck covering_expansion_check(const MetricSpace& space, const std::vector<Point>& base,
                                        const std::vector<Point>& expanded, double r, double C,
                                        int d) {
    ExpansionCheck chk;
    chk.lhs = net_cover_count(space, expanded, r);
    chk.rhs = static_cast<long>(std::ceil(C * std::ldexp(1.0, d) *
                                          static_cast<double>(net_cover_count(space, base, r))));
    chk.pass = chk.lhs <= chk.rhs;
    return chk;
}

}  // namespace nnlab
