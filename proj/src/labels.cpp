#include "nnlab/labels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nnlab {

namespace {

constexpr double kWitnessNudge = 1e-9;

// Uniform sample from an open ball intersected with the domain.
// Sup/interval balls are boxes and are sampled directly; euclidean balls
// are rejection-sampled from the clipped bounding box.
Point sample_in_ball(const MetricSpace& space, const Ball& b, Rng& rng) {
    Box bb;
    bb.lo.resize(space.dim);
    bb.hi.resize(space.dim);
    for (int i = 0; i < space.dim; ++i) {
        bb.lo[i] = std::max(space.domain.lo[i], b.center[i] - b.radius);
        bb.hi[i] = std::min(space.domain.hi[i], b.center[i] + b.radius);
    }
    for (int attempt = 0; attempt < 4096; ++attempt) {
        Point x(space.dim);
        for (int i = 0; i < space.dim; ++i) x[i] = rng.uniform(bb.lo[i], bb.hi[i]);
        if (space.kind != MetricKind::euclidean || b.contains(space, x)) return x;
    }
    return b.center;  // degenerate clip; fall back to the center
}

// Point-to-segment distance for the supported metric kinds. For the sup
// norm the objective max(|u(t)|, |v(t)|) is convex piecewise linear in t,
// so the minimum is attained at an endpoint or a breakpoint (a zero of
// u or v, or a crossing |u| = |v|).
double point_segment_distance(const MetricSpace& space, const Point& p, double ax, double ay,
                              double bx, double by) {
    const double dx = bx - ax, dy = by - ay;
    const double ux = p[0] - ax, uy = p[1] - ay;
    if (space.kind == MetricKind::euclidean) {
        const double len2 = dx * dx + dy * dy;
        double t = len2 > 0.0 ? (ux * dx + uy * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double ex = ux - t * dx, ey = uy - t * dy;
        return std::sqrt(ex * ex + ey * ey);
    }
    auto value = [&](double t) {
        return std::max(std::fabs(ux - t * dx), std::fabs(uy - t * dy));
    };
    double best = std::min(value(0.0), value(1.0));
    auto consider = [&](double num, double den) {
        if (den != 0.0) {
            const double t = num / den;
            if (t > 0.0 && t < 1.0) best = std::min(best, value(t));
        }
    };
    consider(ux, dx);            // u(t) = 0
    consider(uy, dy);            // v(t) = 0
    consider(ux - uy, dx - dy);  // u(t) = v(t)
    consider(ux + uy, dx + dy);  // u(t) = -v(t)
    return best;
}

}  // namespace

std::vector<Point> LabelFunction::boundary_sample(int, std::uint64_t) const {
    throw std::invalid_argument(family() + ": boundary sampler unsupported");
}

std::pair<Point, Point> LabelFunction::cross_class_pair(double) const {
    throw std::invalid_argument(family() + ": cross-class pair oracle unsupported");
}

// --------------------------------------------------------------------
// Threshold.

ThresholdLabel::ThresholdLabel(MetricSpace space, double threshold)
    : LabelFunction(std::move(space)), t_(threshold) {
    if (space_.dim != 1) throw std::invalid_argument("threshold: one-dimensional domains only");
    if (t_ < space_.domain.lo[0] || t_ > space_.domain.hi[0])
        throw std::invalid_argument("threshold: t outside the domain");
}

int ThresholdLabel::label(const Point& x) const { return x[0] >= t_ ? 1 : 0; }

MarginQuery ThresholdLabel::margin(const Point& x) const {
    MarginQuery q;
    q.value = std::fabs(x[0] - t_);
    q.exact = true;
    if (q.value > 0.0) {
        const double step = q.value * (1.0 + 0.5 * kWitnessNudge);
        const double w = x[0] >= t_ ? x[0] - step : x[0] + step;
        if (w >= space_.domain.lo[0] && w <= space_.domain.hi[0] && (w >= t_) != (x[0] >= t_))
            q.witness = Point{w};
    }
    return q;
}

std::vector<Point> ThresholdLabel::boundary_sample(int, std::uint64_t) const {
    return {Point{t_}};
}

std::pair<Point, Point> ThresholdLabel::cross_class_pair(double r) const {
    if (r <= 0.0) throw std::invalid_argument("cross_class_pair: requires r > 0");
    const double room = std::min(t_ - space_.domain.lo[0], space_.domain.hi[0] - t_);
    if (room <= 0.0) throw std::runtime_error("threshold: no opposite class inside the domain");
    const double eps = std::min(r / 8.0, room / 2.0);
    return {Point{t_ - eps}, Point{t_ + eps}};
}

// --------------------------------------------------------------------
// Halfspace.

HalfspaceLabel::HalfspaceLabel(MetricSpace space, std::vector<double> w, double b)
    : LabelFunction(std::move(space)), w_(std::move(w)), b_(b) {
    if (static_cast<int>(w_.size()) != space_.dim)
        throw std::invalid_argument("halfspace: weight dimension mismatch");
    double norm = 0.0;
    for (double wi : w_) norm += std::fabs(wi);
    if (norm == 0.0) throw std::invalid_argument("halfspace: zero normal");
    // Anchor: an interior boundary point, used by the pair oracle.
    if (space_.dim == 1) {
        boundary_anchor_ = {b_ / w_[0]};
    } else if (space_.dim == 2) {
        // Midpoint of the boundary segment: interior whenever the boundary
        // crosses the box, unlike the segment endpoints on the walls.
        auto pts = boundary_sample(2, 1);
        if (pts.size() == 2)
            boundary_anchor_ = {0.5 * (pts[0][0] + pts[1][0]), 0.5 * (pts[0][1] + pts[1][1])};
    }
}

double HalfspaceLabel::dual_norm() const {
    switch (space_.kind) {
        case MetricKind::euclidean: {
            double s = 0.0;
            for (double wi : w_) s += wi * wi;
            return std::sqrt(s);
        }
        case MetricKind::sup:
        case MetricKind::interval: {
            double s = 0.0;
            for (double wi : w_) s += std::fabs(wi);
            return s;
        }
    }
    return 1.0;
}

int HalfspaceLabel::label(const Point& x) const {
    double s = -b_;
    for (int i = 0; i < space_.dim; ++i) s += w_[i] * x[i];
    return s >= 0.0 ? 1 : 0;
}

MarginQuery HalfspaceLabel::margin(const Point& x) const {
    double s = -b_;
    for (int i = 0; i < space_.dim; ++i) s += w_[i] * x[i];
    MarginQuery q;
    q.value = std::fabs(s) / dual_norm();
    q.exact = true;
    if (q.value > 0.0) {
        // Step across the hyperplane along the dual-optimal direction.
        Point w = x;
        const double step = q.value * (1.0 + 0.5 * kWitnessNudge);
        const double sgn = s > 0.0 ? 1.0 : -1.0;
        if (space_.kind == MetricKind::euclidean) {
            double n2 = dual_norm();
            for (int i = 0; i < space_.dim; ++i) w[i] -= sgn * step * w_[i] / n2;
        } else {
            for (int i = 0; i < space_.dim; ++i)
                w[i] -= sgn * step * (w_[i] > 0 ? 1.0 : (w_[i] < 0 ? -1.0 : 0.0));
        }
        if (space_.in_domain(w) && label(w) != label(x)) q.witness = w;
    }
    return q;
}

std::vector<Point> HalfspaceLabel::boundary_sample(int n, std::uint64_t seed) const {
    if (space_.dim == 1) return {Point{b_ / w_[0]}};
    if (space_.dim != 2) throw std::invalid_argument("halfspace: boundary sampler needs dim <= 2");
    // Clip the line w.x = b to the box.
    const Box& box = space_.domain;
    std::vector<Point> ends;
    auto push = [&](double x0, double x1) {
        const double tol = 1e-12 * (1.0 + std::fabs(x0) + std::fabs(x1));
        if (x0 < box.lo[0] - tol || x0 > box.hi[0] + tol) return;
        if (x1 < box.lo[1] - tol || x1 > box.hi[1] + tol) return;
        Point p{std::clamp(x0, box.lo[0], box.hi[0]), std::clamp(x1, box.lo[1], box.hi[1])};
        for (const auto& q : ends)
            if (std::fabs(q[0] - p[0]) + std::fabs(q[1] - p[1]) < 1e-9) return;
        ends.push_back(p);
    };
    if (w_[1] != 0.0) {
        push(box.lo[0], (b_ - w_[0] * box.lo[0]) / w_[1]);
        push(box.hi[0], (b_ - w_[0] * box.hi[0]) / w_[1]);
    }
    if (w_[0] != 0.0) {
        push((b_ - w_[1] * box.lo[1]) / w_[0], box.lo[1]);
        push((b_ - w_[1] * box.hi[1]) / w_[0], box.hi[1]);
    }
    if (ends.size() < 2) throw std::runtime_error("halfspace: boundary does not cross the domain");
    std::vector<Point> out;
    out.reserve(n);
    Rng rng(derive_seed(seed, 11));
    out.push_back(ends[0]);
    out.push_back(ends[1]);
    for (int i = 2; i < n; ++i) {
        const double t = (n > 2) ? (rng.uniform()) : 0.5;
        out.push_back({ends[0][0] + t * (ends[1][0] - ends[0][0]),
                       ends[0][1] + t * (ends[1][1] - ends[0][1])});
    }
    return out;
}

std::pair<Point, Point> HalfspaceLabel::cross_class_pair(double r) const {
    if (r <= 0.0) throw std::invalid_argument("cross_class_pair: requires r > 0");
    if (boundary_anchor_.empty())
        throw std::runtime_error("halfspace: boundary does not cross the domain");
    double n2 = 0.0;
    for (double wi : w_) n2 += wi * wi;
    n2 = std::sqrt(n2);
    // Offsets along the euclidean normal keep the pair within r/4 in both
    // supported metrics (the sup distance never exceeds the euclidean one).
    double room = space_.diameter();
    for (int i = 0; i < space_.dim; ++i) {
        room = std::min(room, boundary_anchor_[i] - space_.domain.lo[i]);
        room = std::min(room, space_.domain.hi[i] - boundary_anchor_[i]);
    }
    const double eps = std::min(r / 8.0, std::max(room / 2.0, 1e-300));
    Point lo = boundary_anchor_, hi = boundary_anchor_;
    for (int i = 0; i < space_.dim; ++i) {
        lo[i] -= eps * w_[i] / n2;
        hi[i] += eps * w_[i] / n2;
    }
    if (!space_.in_domain(lo) || !space_.in_domain(hi))
        throw std::runtime_error("halfspace: pair left the domain");
    return {lo, hi};
}

// --------------------------------------------------------------------
// Union of balls.

UnionOfBallsLabel::UnionOfBallsLabel(MetricSpace space, std::vector<Ball> balls)
    : LabelFunction(std::move(space)), balls_(std::move(balls)) {
    if (balls_.empty()) throw std::invalid_argument("union_of_balls: needs at least one ball");
    for (const auto& b : balls_) {
        if (static_cast<int>(b.center.size()) != space_.dim)
            throw std::invalid_argument("union_of_balls: center dimension mismatch");
        if (b.radius <= 0.0) throw std::invalid_argument("union_of_balls: radii must be positive");
        for (int i = 0; i < space_.dim; ++i)
            if (b.center[i] - b.radius < space_.domain.lo[i] - 1e-12 ||
                b.center[i] + b.radius > space_.domain.hi[i] + 1e-12)
                throw std::invalid_argument("union_of_balls: ball leaves the domain");
    }
    for (std::size_t i = 0; i < balls_.size(); ++i)
        for (std::size_t j = i + 1; j < balls_.size(); ++j)
            if (distance(space_, balls_[i].center, balls_[j].center) <=
                balls_[i].radius + balls_[j].radius)
                throw std::invalid_argument("union_of_balls: balls must be pairwise disjoint");
}

int UnionOfBallsLabel::label(const Point& x) const {
    for (const auto& b : balls_)
        if (b.contains(space_, x)) return 1;
    return 0;
}

MarginQuery UnionOfBallsLabel::margin(const Point& x) const {
    MarginQuery q;
    q.exact = true;
    // Inside a ball: distance to that sphere. Outside: distance to the
    // nearest sphere (disjointness makes both exact).
    int inside = -1;
    double best_out = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < balls_.size(); ++j) {
        const double d = distance(space_, x, balls_[j].center);
        if (d < balls_[j].radius) {
            inside = static_cast<int>(j);
            q.value = balls_[j].radius - d;
            break;
        }
        if (d - balls_[j].radius < best_out) {
            best_out = d - balls_[j].radius;
            best_j = j;
        }
    }
    if (inside < 0) q.value = std::max(0.0, best_out);
    if (q.value <= 0.0) return q;

    const std::size_t j = inside >= 0 ? static_cast<std::size_t>(inside) : best_j;
    const Ball& b = balls_[j];
    const double d = distance(space_, x, b.center);
    Point u(space_.dim, 0.0);
    if (d > 0.0) {
        for (int i = 0; i < space_.dim; ++i) u[i] = (x[i] - b.center[i]) / d;
    } else {
        u[0] = 1.0;  // center: any direction reaches the sphere
    }
    const double step = q.value * (1.0 + 0.5 * kWitnessNudge);
    Point w = x;
    const double sgn = inside >= 0 ? 1.0 : -1.0;  // inside: walk out; outside: walk in
    for (int i = 0; i < space_.dim; ++i) w[i] += sgn * step * u[i];
    if (space_.in_domain(w) && label(w) != label(x)) q.witness = w;
    return q;
}

std::vector<Point> UnionOfBallsLabel::boundary_sample(int n, std::uint64_t /*seed*/) const {
    std::vector<Point> out;
    const int per_ball = std::max(4, n / static_cast<int>(balls_.size()));
    for (const auto& b : balls_) {
        if (space_.dim == 1) {
            out.push_back({b.center[0] - b.radius});
            out.push_back({b.center[0] + b.radius});
            continue;
        }
        for (int i = 0; i < per_ball; ++i) {
            const double t = 2.0 * 3.14159265358979323846 * i / per_ball;
            double cx = std::cos(t), cy = std::sin(t);
            if (space_.kind == MetricKind::sup) {
                const double m = std::max(std::fabs(cx), std::fabs(cy));
                cx /= m;  // project the direction onto the sup-norm sphere
                cy /= m;
            }
            out.push_back({b.center[0] + b.radius * cx, b.center[1] + b.radius * cy});
        }
    }
    return out;
}

std::pair<Point, Point> UnionOfBallsLabel::cross_class_pair(double r) const {
    if (r <= 0.0) throw std::invalid_argument("cross_class_pair: requires r > 0");
    const Ball& b = balls_.front();
    const double eps = std::min(r / 8.0, b.radius / 4.0);
    Point in = b.center, out = b.center;
    in[0] += b.radius - eps;
    out[0] += b.radius + eps;
    if (!space_.in_domain(out)) {  // try the other side before giving up
        in[0] = b.center[0] - (b.radius - eps);
        out[0] = b.center[0] - (b.radius + eps);
        if (!space_.in_domain(out)) throw std::runtime_error("union_of_balls: pair left the domain");
    }
    return {in, out};
}

// --------------------------------------------------------------------
// Checkerboard.

CheckerboardLabel::CheckerboardLabel(MetricSpace space, int cells_per_axis)
    : LabelFunction(std::move(space)), cells_(cells_per_axis) {
    if (cells_ < 2) throw std::invalid_argument("checkerboard: needs >= 2 cells per axis");
}

int CheckerboardLabel::label(const Point& x) const {
    long parity = 0;
    for (int i = 0; i < space_.dim; ++i) {
        const double w = (space_.domain.hi[i] - space_.domain.lo[i]) / cells_;
        long idx = static_cast<long>(std::floor((x[i] - space_.domain.lo[i]) / w));
        idx = std::clamp(idx, 0L, static_cast<long>(cells_ - 1));
        parity += idx;
    }
    return static_cast<int>(parity & 1);
}

MarginQuery CheckerboardLabel::margin(const Point& x) const {
    // Cells adjacent across any interior wall have opposite parity, so the
    // margin is the distance to the nearest interior wall (same value for
    // sup and euclidean metrics: the step is along one axis).
    MarginQuery q;
    q.exact = true;
    double best = std::numeric_limits<double>::infinity();
    int best_axis = -1;
    double best_wall = 0.0;
    for (int i = 0; i < space_.dim; ++i) {
        const double w = (space_.domain.hi[i] - space_.domain.lo[i]) / cells_;
        for (int k = 1; k < cells_; ++k) {
            const double wall = space_.domain.lo[i] + k * w;
            const double d = std::fabs(x[i] - wall);
            if (d < best) {
                best = d;
                best_axis = i;
                best_wall = wall;
            }
        }
    }
    q.value = best;
    if (q.value > 0.0 && best_axis >= 0) {
        Point wpt = x;
        const double dir = x[best_axis] < best_wall ? 1.0 : -1.0;
        wpt[best_axis] = best_wall + dir * q.value * 0.5 * kWitnessNudge;
        if (space_.in_domain(wpt) && label(wpt) != label(x)) q.witness = wpt;
    }
    return q;
}

std::vector<Point> CheckerboardLabel::boundary_sample(int n, std::uint64_t /*seed*/) const {
    std::vector<Point> out;
    const int walls = (cells_ - 1) * space_.dim;
    const int per_wall = std::max(2, n / std::max(1, walls));
    for (int i = 0; i < space_.dim; ++i) {
        const double w = (space_.domain.hi[i] - space_.domain.lo[i]) / cells_;
        for (int k = 1; k < cells_; ++k) {
            const double wall = space_.domain.lo[i] + k * w;
            if (space_.dim == 1) {
                out.push_back({wall});
                continue;
            }
            const int other = 1 - i;
            for (int s = 0; s < per_wall; ++s) {
                Point p(space_.dim, wall);
                p[i] = wall;
                p[other] = space_.domain.lo[other] +
                           (s + 0.5) / per_wall * (space_.domain.hi[other] - space_.domain.lo[other]);
                out.push_back(p);
            }
        }
    }
    return out;
}

std::pair<Point, Point> CheckerboardLabel::cross_class_pair(double r) const {
    if (r <= 0.0) throw std::invalid_argument("cross_class_pair: requires r > 0");
    const double w = (space_.domain.hi[0] - space_.domain.lo[0]) / cells_;
    const double wall = space_.domain.lo[0] + w;  // first interior wall, axis 0
    const double eps = std::min(r / 8.0, w / 4.0);
    Point lo(space_.dim), hi(space_.dim);
    for (int i = 0; i < space_.dim; ++i) {
        const double mid = 0.5 * (space_.domain.lo[i] + space_.domain.hi[i]);
        lo[i] = hi[i] = mid;
    }
    lo[0] = wall - eps;
    hi[0] = wall + eps;
    return {lo, hi};
}

// --------------------------------------------------------------------
// Fractal boundary (midpoint displacement).

FractalBoundaryLabel::FractalBoundaryLabel(MetricSpace space, int depth, double hurst, double amp,
                                           std::uint64_t seed)
    : LabelFunction(std::move(space)), depth_(depth) {
    if (space_.dim != 2) throw std::invalid_argument("fractal: two-dimensional domains only");
    if (depth_ < 1 || depth_ > 22) throw std::invalid_argument("fractal: depth must be in [1, 22]");
    if (hurst <= 0.0 || hurst > 1.0) throw std::invalid_argument("fractal: hurst must be in (0, 1]");
    const double ratio = std::pow(2.0, -hurst);
    const double total = amp * ratio / (1.0 - ratio);  // worst-case cumulative displacement
    if (amp <= 0.0 || total >= 0.49)
        throw std::invalid_argument("fractal: amplitude too large for the domain");

    segments_ = std::size_t{1} << depth_;
    const double y_lo = space_.domain.lo[1], y_hi = space_.domain.hi[1];
    const double y_mid = 0.5 * (y_lo + y_hi), height = y_hi - y_lo;
    height_.assign(segments_ + 1, y_mid);
    for (int level = 1; level <= depth_; ++level) {
        const std::size_t step = segments_ >> level;
        const double disp = amp * height * std::pow(ratio, level);
        for (std::size_t i = step; i < segments_; i += 2 * step) {
            const double sign = (derive_seed(seed, level, i) & 1) ? 1.0 : -1.0;
            height_[i] = 0.5 * (height_[i - step] + height_[i + step]) + sign * disp;
        }
    }
    // Interval tree of min/max curve heights per dyadic x-interval; the
    // polyline is piecewise linear, so extrema sit on grid vertices.
    seg_min_.resize(depth_ + 1);
    seg_max_.resize(depth_ + 1);
    seg_min_[depth_].resize(segments_);
    seg_max_[depth_].resize(segments_);
    for (std::size_t i = 0; i < segments_; ++i) {
        seg_min_[depth_][i] = std::min(height_[i], height_[i + 1]);
        seg_max_[depth_][i] = std::max(height_[i], height_[i + 1]);
    }
    for (int level = depth_ - 1; level >= 0; --level) {
        const std::size_t count = std::size_t{1} << level;
        seg_min_[level].resize(count);
        seg_max_[level].resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            seg_min_[level][i] = std::min(seg_min_[level + 1][2 * i], seg_min_[level + 1][2 * i + 1]);
            seg_max_[level][i] = std::max(seg_max_[level + 1][2 * i], seg_max_[level + 1][2 * i + 1]);
        }
    }
}

double FractalBoundaryLabel::grid_x(std::size_t i) const {
    const double x_lo = space_.domain.lo[0], x_hi = space_.domain.hi[0];
    return x_lo + (x_hi - x_lo) * (static_cast<double>(i) / static_cast<double>(segments_));
}

double FractalBoundaryLabel::curve_height(double x0) const {
    const double x_lo = space_.domain.lo[0], x_hi = space_.domain.hi[0];
    double u = (x0 - x_lo) / (x_hi - x_lo) * static_cast<double>(segments_);
    u = std::clamp(u, 0.0, static_cast<double>(segments_));
    std::size_t i = std::min(static_cast<std::size_t>(u), segments_ - 1);
    const double frac = u - static_cast<double>(i);
    return height_[i] + frac * (height_[i + 1] - height_[i]);
}

int FractalBoundaryLabel::label(const Point& x) const { return x[1] >= curve_height(x[0]) ? 1 : 0; }

MarginQuery FractalBoundaryLabel::margin(const Point& x) const {
    // Branch and bound over the dyadic interval tree; node bound = box
    // distance to [x-range] x [height range].
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_seg = 0;

    auto box_bound = [&](int level, std::size_t idx) {
        const std::size_t span = segments_ >> level;
        const double bx_lo = grid_x(idx * span), bx_hi = grid_x((idx + 1) * span);
        const double dx = std::max({bx_lo - x[0], x[0] - bx_hi, 0.0});
        const double dy = std::max({seg_min_[level][idx] - x[1], x[1] - seg_max_[level][idx], 0.0});
        return space_.kind == MetricKind::euclidean ? std::hypot(dx, dy) : std::max(dx, dy);
    };

    auto descend = [&](auto&& self, int level, std::size_t idx) -> void {
        if (box_bound(level, idx) >= best) return;
        if (level == depth_) {
            const double d = point_segment_distance(space_, x, grid_x(idx), height_[idx],
                                                    grid_x(idx + 1), height_[idx + 1]);
            if (d < best) {
                best = d;
                best_seg = idx;
            }
            return;
        }
        const std::size_t l = 2 * idx, r = 2 * idx + 1;
        if (box_bound(level + 1, l) <= box_bound(level + 1, r)) {
            self(self, level + 1, l);
            self(self, level + 1, r);
        } else {
            self(self, level + 1, r);
            self(self, level + 1, l);
        }
    };
    descend(descend, 0, 0);

    MarginQuery q;
    q.value = best;
    q.exact = false;
    q.error_bound = 1e-9 * (1.0 + best);
    if (best > 0.0) {
        // Walk through the closest vertex of the winning segment.
        const double ax = grid_x(best_seg), bx = grid_x(best_seg + 1);
        const double ay = height_[best_seg], by = height_[best_seg + 1];
        // Nearest point on the segment (euclidean projection is enough for
        // the witness; cross to the other side of the polyline).
        const double dx = bx - ax, dy = by - ay;
        const double len2 = dx * dx + dy * dy;
        double t = len2 > 0.0 ? ((x[0] - ax) * dx + (x[1] - ay) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const Point qp{ax + t * dx, ay + t * dy};
        Point w = x;
        const double scale = 1.0 + 2.0 * kWitnessNudge;
        w[0] = x[0] + (qp[0] - x[0]) * scale;
        w[1] = x[1] + (qp[1] - x[1]) * scale;
        if (space_.in_domain(w) && label(w) != label(x)) q.witness = w;
    }
    return q;
}

std::vector<Point> FractalBoundaryLabel::boundary_sample(int n, std::uint64_t /*seed*/) const {
    std::vector<Point> out;
    const std::size_t stride = std::max<std::size_t>(1, segments_ / std::max(1, n));
    for (std::size_t i = 0; i <= segments_; i += stride) out.push_back({grid_x(i), height_[i]});
    return out;
}

std::shared_ptr<LabelFunction> make_threshold(const MetricSpace& space, double t) {
    return std::make_shared<ThresholdLabel>(space, t);
}

// --------------------------------------------------------------------
// Mutually-labeling machinery.

MlCheck is_mutually_labeling(const LabelFunction& eta, const std::vector<Point>& points) {
    if (points.empty()) throw std::invalid_argument("is_mutually_labeling: empty set");
    const double diam = diameter(eta.space(), points);
    MlCheck out;
    for (const auto& p : points) {
        if (!(diam < eta.margin(p).value)) {  // strict: boundary points fail even alone
            out.ok = false;
            out.witness = p;
            return out;
        }
    }
    return out;
}

MlCheck is_mutually_labeling(const LabelFunction& eta, const Ball& ball, int n_probes,
                             std::uint64_t seed) {
    if (ball.radius <= 0.0) throw std::invalid_argument("is_mutually_labeling: empty ball");
    const double diam_bound = 2.0 * ball.radius;
    MlCheck out;
    Rng rng(seed);
    auto test = [&](const Point& p) {
        if (eta.margin(p).value <= diam_bound) {
            out.ok = false;
            out.witness = p;
            return false;
        }
        return true;
    };
    if (!test(ball.center)) return out;
    for (int i = 0; i < n_probes; ++i)
        if (!test(sample_in_ball(eta.space(), ball, rng))) return out;
    return out;
}

std::optional<Ball> mutually_labeling_ball(const LabelFunction& eta, const Point& x, double safety) {
    if (safety <= 0.0 || safety >= 1.0)
        throw std::invalid_argument("mutually_labeling_ball: safety must be in (0, 1)");
    const double m = eta.margin(x).value;
    if (m <= 0.0) return std::nullopt;
    return Ball{x, safety * m / 3.0};
}

bool v_r_membership(const LabelFunction& eta, const Point& x, double r) {
    if (r <= 0.0) throw std::invalid_argument("v_r_membership: requires r > 0");
    return eta.margin(x).value >= r;
}

MlCoverEstimate ml_covering_number_estimate(const LabelFunction& eta,
                                            const ReferenceMeasure& measure, double r,
                                            long proposal_budget, double tol,
                                            std::uint64_t seed) {
    if (r <= 0.0) throw std::invalid_argument("ml_covering_number_estimate: requires r > 0");
    const MetricSpace& space = eta.space();
    const double diam = space.diameter();
    MlCoverEstimate out;
    Rng rng(derive_seed(seed, 1));

    auto covered = [&](const Point& x) {
        for (const auto& b : out.balls)
            if (b.contains(space, x)) return true;
        return false;
    };
    auto layer_of = [&](double m) {
        int k = 0;
        while (2.0 * std::ldexp(r, k) <= m && std::ldexp(r, k + 1) <= diam) ++k;
        return k;  // margin floor 2^k r <= m
    };
    const int top = layer_of(diam);
    long budget = proposal_budget;
    bool exhausted = false;

    // Layer sweep from the widest margins down, then a global sweep over
    // all of V_r. Patience scales with the leftover tolerance.
    const int layer_patience = 300;
    const long global_patience = static_cast<long>(std::ceil(3.0 / tol));
    for (int k = top; k >= 0 && !exhausted; --k) {
        int misses = 0;
        while (misses < layer_patience) {
            if (budget-- <= 0) {
                exhausted = true;
                break;
            }
            const Point x = measure.sample(rng);
            const double m = eta.margin(x).value;
            const bool in_layer =
                m >= std::ldexp(r, k) && (k == top || m < std::ldexp(r, k + 1));
            if (in_layer && !covered(x)) {
                out.balls.push_back(Ball{x, 0.99 * std::ldexp(r, k) / 3.0});
                misses = 0;
            } else {
                ++misses;
            }
        }
    }
    long misses = 0;
    while (!exhausted && misses < global_patience) {
        if (budget-- <= 0) {
            exhausted = true;
            break;
        }
        const Point x = measure.sample(rng);
        const double m = eta.margin(x).value;
        if (m >= r && !covered(x)) {
            out.balls.push_back(Ball{x, 0.99 * std::ldexp(r, layer_of(m)) / 3.0});
            misses = 0;
        } else {
            ++misses;
        }
    }

    out.count = static_cast<int>(out.balls.size());
    const MassEstimate left = measure.mass_of_indicator(
        [&](const Point& x) { return eta.margin(x).value >= r && !covered(x); }, 20000,
        derive_seed(seed, 2));
    out.leftover = left.value;
    out.complete = !exhausted;
    return out;
}

MarginBoundaryReport margin_equals_boundary_distance_check(const LabelFunction& eta, int n_probes,
                                                           int n_boundary, std::uint64_t seed) {
    const MetricSpace& space = eta.space();
    if (space.kind == MetricKind::sup && space.dim > 1)
        throw std::invalid_argument(
            "margin_equals_boundary_distance_check: needs a euclidean-type metric");
    if (!eta.has_boundary_sampler())
        throw std::invalid_argument(
            "margin_equals_boundary_distance_check: family lacks a boundary sampler");
    const std::vector<Point> boundary = eta.boundary_sample(n_boundary, derive_seed(seed, 3));
    const ReferenceMeasure probe_measure = ReferenceMeasure::lebesgue(space);
    Rng rng(derive_seed(seed, 4));
    MarginBoundaryReport rep;
    rep.n_probes = n_probes;
    rep.n_boundary = static_cast<int>(boundary.size());
    for (int i = 0; i < n_probes; ++i) {
        const Point x = probe_measure.sample(rng);
        const double m = eta.margin(x).value;
        const double d = set_distance(space, x, boundary).dist;
        rep.max_discrepancy = std::max(rep.max_discrepancy, std::fabs(m - d));
    }
    return rep;
}

}  // namespace nnlab
