#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nnlab/measure.hpp"
#include "nnlab/metric.hpp"

namespace nnlab {

// Margin query result. `value` is the distance from x to the nearest
// point of the opposite class (0 on the decision boundary). For families
// with closed-form margins `exact` is true and `error_bound` is 0; the
// fractal family reports exact = false with the refinement tolerance.
// When present, `witness` is an in-domain point of the opposite class at
// distance <= value * (1 + 1e-9).
struct MarginQuery {
    double value = 0.0;
    bool exact = true;
    double error_bound = 0.0;
    std::optional<Point> witness;
};

// A deterministic binary label function on the domain. Every family is
// total on the domain box.
class LabelFunction {
public:
    virtual ~LabelFunction() = default;

    virtual int label(const Point& x) const = 0;
    virtual MarginQuery margin(const Point& x) const = 0;
    virtual std::string family() const = 0;
    const MetricSpace& space() const { return space_; }

    // Dense sample of the decision boundary, when the family supports it.
    virtual bool has_boundary_sampler() const { return false; }
    virtual std::vector<Point> boundary_sample(int n, std::uint64_t seed) const;

    // A pair of opposite-label points at distance < r/3, used by the
    // adversarial pair generator. Unsupported by default.
    virtual bool has_cross_class_pair() const { return false; }
    virtual std::pair<Point, Point> cross_class_pair(double r) const;

protected:
    explicit LabelFunction(MetricSpace space) : space_(std::move(space)) {}
    MetricSpace space_;
};

// label(x) = 1{x >= t} on a 1-D interval. Margin |x - t|, exact.
class ThresholdLabel : public LabelFunction {
public:
    ThresholdLabel(MetricSpace space, double threshold);
    int label(const Point& x) const override;
    MarginQuery margin(const Point& x) const override;
    std::string family() const override { return "threshold"; }
    bool has_boundary_sampler() const override { return true; }
    std::vector<Point> boundary_sample(int n, std::uint64_t seed) const override;
    bool has_cross_class_pair() const override { return true; }
    std::pair<Point, Point> cross_class_pair(double r) const override;
    double threshold() const { return t_; }

private:
    double t_;
};

// label(x) = 1{w.x >= b}. Margin |w.x - b| / ||w||_*, where the dual norm
// matches the metric (ell-2 for euclidean, ell-1 for sup). The closed
// form is the distance to the separating hyperplane; it equals the
// in-domain margin whenever the projection onto the hyperplane stays in
// the box, and is a lower bound otherwise (safe direction: probes within
// the reported margin always share the label).
class HalfspaceLabel : public LabelFunction {
public:
    HalfspaceLabel(MetricSpace space, std::vector<double> w, double b);
    int label(const Point& x) const override;
    MarginQuery margin(const Point& x) const override;
    std::string family() const override { return "halfspace"; }
    bool has_boundary_sampler() const override { return space_.dim <= 2; }
    std::vector<Point> boundary_sample(int n, std::uint64_t seed) const override;
    bool has_cross_class_pair() const override { return true; }
    std::pair<Point, Point> cross_class_pair(double r) const override;

private:
    double dual_norm() const;
    std::vector<double> w_;
    double b_;
    Point boundary_anchor_;  // an interior point of {w.x = b} inside the box
};

// label(x) = 1 inside a union of pairwise disjoint open balls contained
// in the domain. Margins are exact: r_i - d(x, c_i) inside ball i,
// min_i (d(x, c_i) - r_i) outside (clamped at 0).
class UnionOfBallsLabel : public LabelFunction {
public:
    UnionOfBallsLabel(MetricSpace space, std::vector<Ball> balls);
    int label(const Point& x) const override;
    MarginQuery margin(const Point& x) const override;
    std::string family() const override { return "union_of_balls"; }
    bool has_boundary_sampler() const override { return space_.dim <= 2; }
    std::vector<Point> boundary_sample(int n, std::uint64_t seed) const override;
    bool has_cross_class_pair() const override { return true; }
    std::pair<Point, Point> cross_class_pair(double r) const override;

private:
    std::vector<Ball> balls_;
};

// k x k (x k ...) parity checkerboard on the domain box. Margin = min
// over axes of the distance to the nearest interior cell wall, exact for
// sup and euclidean metrics.
class CheckerboardLabel : public LabelFunction {
public:
    CheckerboardLabel(MetricSpace space, int cells_per_axis);
    int label(const Point& x) const override;
    MarginQuery margin(const Point& x) const override;
    std::string family() const override { return "checkerboard"; }
    bool has_boundary_sampler() const override { return space_.dim <= 2; }
    std::vector<Point> boundary_sample(int n, std::uint64_t seed) const override;
    bool has_cross_class_pair() const override { return true; }
    std::pair<Point, Point> cross_class_pair(double r) const override;

private:
    int cells_;
};

// 2-D label split by a self-affine midpoint-displacement curve: start
// from a horizontal segment at mid-height, recursively displace dyadic
// midpoints by +/- amp * 2^(-hurst*level) with a seeded deterministic
// sign pattern, stop at `depth` levels. The boundary is the resulting
// polyline over a 2^depth grid (graph box dimension ~ 2 - hurst over
// scales above 2^-depth); label(x) = 1{y >= curve(x)}. The margin is the
// distance to the polyline computed by bounding-box refinement over the
// dyadic interval tree and is flagged exact = false with a numeric
// tolerance.
class FractalBoundaryLabel : public LabelFunction {
public:
    FractalBoundaryLabel(MetricSpace space, int depth, double hurst, double amp,
                         std::uint64_t seed);
    int label(const Point& x) const override;
    MarginQuery margin(const Point& x) const override;
    std::string family() const override { return "fractal"; }
    bool has_boundary_sampler() const override { return true; }
    std::vector<Point> boundary_sample(int n, std::uint64_t seed) const override;

    double curve_height(double x0) const;  // in domain coordinates

private:
    double grid_x(std::size_t i) const;
    int depth_;
    std::size_t segments_;
    std::vector<double> height_;               // 2^depth + 1 curve heights
    std::vector<std::vector<double>> seg_min_;  // interval-tree mins per level
    std::vector<std::vector<double>> seg_max_;
};

// Factory used by the config layer.
std::shared_ptr<LabelFunction> make_threshold(const MetricSpace&, double t);

// ---------------------------------------------------------------------
// Mutually-labeling machinery.

struct MlCheck {
    bool ok = true;
    std::optional<Point> witness;  // a point whose margin fails the diameter test
};

// Finite set version: diam(U) < min margin over U, strict.
MlCheck is_mutually_labeling(const LabelFunction& eta, const std::vector<Point>& points);

// Ball version, probe-sampled: compares the ball diameter bound (2r)
// against margins at `n_probes` seeded in-ball probes plus the center.
// One-sided: a `true` answer can be wrong with sparse probes (the error
// shrinks as probes grow); `false` answers carry a witness.
MlCheck is_mutually_labeling(const LabelFunction& eta, const Ball& ball, int n_probes = 512,
                             std::uint64_t seed = 0x9D0Bull);

// B(x, safety * margin(x) / 3), which is mutually labeling whenever
// margin(x) > 0 (safety < 1 keeps the radius strictly below margin/3).
// Returns nullopt at boundary points.
std::optional<Ball> mutually_labeling_ball(const LabelFunction& eta, const Point& x,
                                           double safety = 0.99);

// x in V_r = {margin >= r}.
bool v_r_membership(const LabelFunction& eta, const Point& x, double r);

// Greedy upper bound on the number of mutually-labeling balls needed to
// cover V_r, built layer by layer: points with margin in
// [2^k r, 2^(k+1) r) get balls of radius safety * 2^k r / 3. Sampling is
// seeded; `leftover` is a Monte Carlo estimate of the uncovered mass of
// V_r at exit, and `complete` is false when the proposal budget ran out
// before leftover fell below `tol`.
struct MlCoverEstimate {
    int count = 0;
    double leftover = 0.0;
    bool complete = true;
    std::vector<Ball> balls;
};

MlCoverEstimate ml_covering_number_estimate(const LabelFunction& eta,
                                            const ReferenceMeasure& measure, double r,
                                            long proposal_budget = 200000, double tol = 1e-3,
                                            std::uint64_t seed = 0xC0FFEEull);

// For euclidean-type metrics and families with a boundary sampler:
// max over probes of |margin(x) - dist(x, boundary sample)|. Throws
// std::invalid_argument when unsupported.
struct MarginBoundaryReport {
    double max_discrepancy = 0.0;
    int n_probes = 0;
    int n_boundary = 0;
};

MarginBoundaryReport margin_equals_boundary_distance_check(const LabelFunction& eta, int n_probes,
                                                           int n_boundary, std::uint64_t seed);

}  // namespace nnlab
