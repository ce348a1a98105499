#include "nnlab/metric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace nnlab {

std::string to_string(MetricKind k) {
    switch (k) {
        case MetricKind::sup: return "sup";
        case MetricKind::euclidean: return "euclidean";
        case MetricKind::interval: return "interval";
    }
    return "?";
}

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "sup") return MetricKind::sup;
    if (s == "euclidean") return MetricKind::euclidean;
    if (s == "interval") return MetricKind::interval;
    throw std::invalid_argument("unknown metric kind: " + s);
}

bool Box::contains(const Point& x) const {
    if (x.size() != lo.size()) throw std::invalid_argument("Box::contains: dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
    return v;
}

double Box::overlap_volume(const Box& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("Box::overlap_volume: dimension mismatch");
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        const double l = std::max(lo[i], other.lo[i]);
        const double h = std::min(hi[i], other.hi[i]);
        if (h <= l) return 0.0;
        v *= h - l;
    }
    return v;
}

double MetricSpace::diameter() const {
    switch (kind) {
        case MetricKind::interval:
            return domain.hi[0] - domain.lo[0];
        case MetricKind::sup: {
            double m = 0.0;
            for (int i = 0; i < dim; ++i) m = std::max(m, domain.hi[i] - domain.lo[i]);
            return m;
        }
        case MetricKind::euclidean: {
            double s = 0.0;
            for (int i = 0; i < dim; ++i) {
                const double e = domain.hi[i] - domain.lo[i];
                s += e * e;
            }
            return std::sqrt(s);
        }
    }
    return 0.0;
}

MetricSpace MetricSpace::make_interval(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("make_interval: requires lo < hi");
    MetricSpace s;
    s.kind = MetricKind::interval;
    s.dim = 1;
    s.domain = Box{{lo}, {hi}};
    s.doubling_d = 1;
    s.doubling_c = 2.0;
    return s;
}

MetricSpace MetricSpace::make_box(MetricKind kind, std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size() || lo.empty()) throw std::invalid_argument("make_box: bad box");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw std::invalid_argument("make_box: requires lo < hi per axis");
    if (kind == MetricKind::interval && lo.size() != 1)
        throw std::invalid_argument("make_box: interval metric is one-dimensional");
    MetricSpace s;
    s.kind = kind;
    s.dim = static_cast<int>(lo.size());
    s.domain = Box{std::move(lo), std::move(hi)};
    s.doubling_d = s.dim;
    s.doubling_c = std::ldexp(1.0, s.dim);  // 2^dim
    return s;
}

MetricSpace MetricSpace::unit_cube(MetricKind kind, int dim) {
    return make_box(kind, std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

bool Ball::contains(const MetricSpace& space, const Point& x) const {
    return distance(space, center, x) < radius;
}

double distance(const MetricSpace& space, const Point& x, const Point& y) {
    if (static_cast<int>(x.size()) != space.dim || static_cast<int>(y.size()) != space.dim)
        throw std::invalid_argument("distance: dimension mismatch");
    switch (space.kind) {
        case MetricKind::interval:
            return std::fabs(x[0] - y[0]);
        case MetricKind::sup: {
            double m = 0.0;
            for (int i = 0; i < space.dim; ++i) m = std::max(m, std::fabs(x[i] - y[i]));
            return m;
        }
        case MetricKind::euclidean: {
            double s = 0.0;
            for (int i = 0; i < space.dim; ++i) {
                const double e = x[i] - y[i];
                s += e * e;
            }
            if (s >= 1e-280) return std::sqrt(s);
            // The squares underflow around 1e-154 coordinates; rescale by the
            // largest difference so adversarial near-duplicates keep a
            // nonzero, fully accurate distance down to the denormal range.
            double m = 0.0;
            for (int i = 0; i < space.dim; ++i) m = std::max(m, std::fabs(x[i] - y[i]));
            if (m == 0.0) return 0.0;
            double t = 0.0;
            for (int i = 0; i < space.dim; ++i) {
                const double e = (x[i] - y[i]) / m;
                t += e * e;
            }
            return m * std::sqrt(t);
        }
    }
    return 0.0;
}

Nearest set_distance(const MetricSpace& space, const Point& x, const std::vector<Point>& zs) {
    if (zs.empty()) throw std::invalid_argument("set_distance: empty set");
    Nearest best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const double d = distance(space, x, zs[i]);
        if (d < best.dist) best = Nearest{d, i};  // strict: lowest index wins ties
    }
    return best;
}

double diameter(const MetricSpace& space, const std::vector<Point>& zs) {
    if (zs.empty()) throw std::invalid_argument("diameter: empty set");
    double m = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i)
        for (std::size_t j = i + 1; j < zs.size(); ++j)
            m = std::max(m, distance(space, zs[i], zs[j]));
    return m;
}

namespace {

// Branch-and-bound maximum clique on <= 32 vertices given adjacency
// bitmasks. Candidate set P is a bitmask; pruning on popcount.
int max_clique_rec(const std::vector<std::uint32_t>& adj, std::uint32_t p, int current, int& best) {
    if (p == 0) {
        best = std::max(best, current);
        return best;
    }
    if (current + std::popcount(p) <= best) return best;  // bound
    const int v = std::countr_zero(p);
    const std::uint32_t bit = 1u << v;
    // Branch 1: take v.
    max_clique_rec(adj, p & adj[v], current + 1, best);
    // Branch 2: skip v.
    max_clique_rec(adj, p & ~bit, current, best);
    return best;
}

// Greedy r-separated subset in insertion order.
std::vector<std::size_t> greedy_packing(const MetricSpace& space, const std::vector<Point>& pts,
                                        double r) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool ok = true;
        for (std::size_t j : kept) {
            if (distance(space, pts[i], pts[j]) < r) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(i);
    }
    return kept;
}

// Exhaustive minimum set cover by balls centered at the points. `cover[i]`
// is the bitmask of points inside the open ball at point i.
void min_cover_rec(const std::vector<std::uint32_t>& cover, std::uint32_t uncovered, int used,
                   int& best) {
    if (uncovered == 0) {
        best = std::min(best, used);
        return;
    }
    if (used + 1 >= best) return;
    // Branch on the uncovered point with the fewest candidate centers.
    int pick = -1, fewest = 1 << 30;
    for (std::uint32_t rest = uncovered; rest;) {
        const int i = std::countr_zero(rest);
        rest &= rest - 1;
        int cnt = 0;
        for (std::size_t c = 0; c < cover.size(); ++c)
            if (cover[c] & (1u << i)) ++cnt;
        if (cnt < fewest) {
            fewest = cnt;
            pick = i;
        }
    }
    for (std::size_t c = 0; c < cover.size(); ++c) {
        if (cover[c] & (1u << pick)) {
            min_cover_rec(cover, uncovered & ~cover[c], used + 1, best);
        }
    }
}

}  // namespace

CountBound packing_number(const MetricSpace& space, const std::vector<Point>& points, double r,
                          std::size_t exact_cap) {
    if (r <= 0.0) throw std::invalid_argument("packing_number: requires r > 0");
    if (points.empty()) return CountBound{0, true};
    const std::size_t m = points.size();
    if (m <= exact_cap && m <= 32) {
        std::vector<std::uint32_t> adj(m, 0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                if (distance(space, points[i], points[j]) >= r) {
                    adj[i] |= 1u << j;
                    adj[j] |= 1u << i;
                }
        int best = 0;
        const std::uint32_t all = (m == 32) ? ~0u : ((1u << m) - 1);
        max_clique_rec(adj, all, 0, best);
        return CountBound{best, true};
    }
    return CountBound{static_cast<int>(greedy_packing(space, points, r).size()), false};
}

CountBound covering_number(const MetricSpace& space, const std::vector<Point>& points, double r,
                           std::size_t exact_cap) {
    if (r <= 0.0) throw std::invalid_argument("covering_number: requires r > 0");
    if (points.empty()) return CountBound{0, true};
    const std::size_t m = points.size();
    if (m <= exact_cap && m <= 32) {
        std::vector<std::uint32_t> cover(m, 0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (distance(space, points[i], points[j]) < r) cover[i] |= 1u << j;
        int best = static_cast<int>(m);
        const std::uint32_t all = (m == 32) ? ~0u : ((1u << m) - 1);
        min_cover_rec(cover, all, 0, best);
        return CountBound{best, true};
    }
    // Greedy: repeatedly take the center covering the most uncovered points
    // (lowest index on ties).
    std::vector<char> covered(m, 0);
    std::size_t left = m;
    int used = 0;
    while (left > 0) {
        std::size_t best_i = 0;
        long best_gain = -1;
        for (std::size_t i = 0; i < m; ++i) {
            long gain = 0;
            for (std::size_t j = 0; j < m; ++j)
                if (!covered[j] && distance(space, points[i], points[j]) < r) ++gain;
            if (gain > best_gain) {
                best_gain = gain;
                best_i = i;
            }
        }
        for (std::size_t j = 0; j < m; ++j)
            if (!covered[j] && distance(space, points[best_i], points[j]) < r) {
                covered[j] = 1;
                --left;
            }
        ++used;
    }
    return CountBound{used, false};
}

bool r_expansion_membership(const MetricSpace& space, const std::vector<Point>& as, double r,
                            const Point& x) {
    if (as.empty()) throw std::invalid_argument("r_expansion_membership: empty set");
    return set_distance(space, x, as).dist < r;
}

int max_packing_open_box(const std::vector<double>& sides, double r) {
    if (r <= 0.0) throw std::invalid_argument("max_packing_open_box: requires r > 0");
    // In 1-D, an open interval of length s admits floor(s/r)+1 points at
    // pairwise distance >= r, except that an exact multiple loses one
    // (endpoints are excluded). The sup-norm box bound is the product.
    long total = 1;
    for (double s : sides) {
        if (s <= 0.0) return 0;
        const double q = s / r;
        double fq = std::floor(q);
        long count;
        if (q - fq < 1e-12 && fq >= 1.0) {
            count = static_cast<long>(fq);  // exact multiple: open box loses an endpoint
        } else {
            count = static_cast<long>(fq) + 1;
        }
        total *= count;
        if (total > (1L << 40)) break;  // audit-scale guard
    }
    return static_cast<int>(std::min<long>(total, 1L << 40));
}

std::optional<Box> ball_as_box(const MetricSpace& space, const Ball& b) {
    if (space.kind == MetricKind::euclidean && space.dim > 1) return std::nullopt;
    Box out;
    out.lo.resize(space.dim);
    out.hi.resize(space.dim);
    for (int i = 0; i < space.dim; ++i) {
        out.lo[i] = std::max(space.domain.lo[i], b.center[i] - b.radius);
        out.hi[i] = std::min(space.domain.hi[i], b.center[i] + b.radius);
    }
    return out;
}

}  // namespace nnlab
