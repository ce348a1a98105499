#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnlab/measure.hpp"
#include "nnlab/metric.hpp"

namespace nnlab {

// Greedy r-net size over a point sample (grid-bucketed): every sample
// point is within r of a returned center and centers are pairwise > r
// apart. An upper bound for the covering number at r and a lower bound
// for packing at r; exactly the quantity whose log-log slope is the
// box-counting dimension.
long net_cover_count(const MetricSpace& space, const std::vector<Point>& pts, double r);

struct BoxDimensionEstimate {
    double slope = 0.0;           // least-squares slope of log N_r vs log 1/r
    std::vector<double> radii;    // schedule actually used
    std::vector<long> counts;     // greedy covering counts
    bool truncated = false;       // schedule cut where the sample got too sparse
    std::string note;
};

// Box-counting dimension estimate from a point sample of A. The radius
// schedule is r_j = 2^-j for j in [j_min, j_max], truncated once r drops
// below 3x the median nearest-neighbor spacing of the sample (below that
// the counts saturate at the sample size and flatten the slope).
BoxDimensionEstimate box_dimension_estimate(const MetricSpace& space,
                                            const std::vector<Point>& pts, int j_min = 2,
                                            int j_max = 10);

// Median nearest-neighbor spacing of a sample (grid ring search; at most
// `cap` query points, deterministically strided).
double median_nn_spacing(const MetricSpace& space, const std::vector<Point>& pts, int cap = 4096);

struct MinkowskiEstimate {
    double content = 0.0;  // nu(A^r)/r at the smallest reliable r
    double r_used = 0.0;
    bool exact = false;    // interval arithmetic (1-d) rather than Monte Carlo
    std::vector<double> radii;
    std::vector<double> values;   // per-r nu(A^r)/r, for monotonicity inspection
    std::vector<double> stderrs;  // 0 when exact
    std::string note;
};

// Minkowski content estimate from a dense boundary sample: nu(A^r)/r
// along r_j = 2^-j, j in [j_min, j_max]. Exact interval unions in 1-d;
// elsewhere Monte Carlo over `mc_samples` nu-draws with a grid-bucketed
// exact membership test. Reports the value at the smallest r whose
// standard error stays below 5% of the value.
MinkowskiEstimate minkowski_content_estimate(const MetricSpace& space,
                                             const std::vector<Point>& boundary,
                                             const ReferenceMeasure& measure, int j_min = 2,
                                             int j_max = 10, long mc_samples = 200000,
                                             std::uint64_t seed = 0x6E0C0DE);

// Mistake-curve upper bound for a dominated process against a geometric
// boundary: margin sets V_r cost at most C * r^-(b+c1) mutually-labeling
// covers while nu(V_r^c) <= (m+c2) * r, giving
//   min{ N, inf_r C r^-(b+c1) + N * eps((m+c2) r) + sqrt(2N log(2N/p)) }
// with eps(delta) = min(1, (delta/sigma)^alpha). The infimum is taken
// over a geometric r grid below r0 plus the closed-form optimizer r*_N.
struct RateCurveParams {
    double sigma = 1.0;
    double alpha = 1.0;  // 1 for smoothed processes
    double b_hat = 1.0;  // fitted box dimension of the boundary
    double m_hat = 1.0;  // fitted Minkowski content of the boundary
    double c1 = 0.5;
    double c2 = 0.5;
    double C = 1.0;   // N_ML(V_r) <= C * r^-(b_hat+c1), fitted
    double r0 = 0.5;  // largest radius the fit is trusted at
    double p = 0.05;  // failure probability of the Azuma term
};

double rate_curve_rstar(double N, const RateCurveParams& prm);
double rate_curve_bound(double N, const RateCurveParams& prm);

// Largest C with count_j <= C * r_j^-exponent across the fitted curve.
double fit_rate_constant(const std::vector<double>& radii, const std::vector<double>& counts,
                         double exponent);

struct ExpansionCheck {
    long lhs = 0;  // N_r(A^r) from the expanded sample
    long rhs = 0;  // C * 2^d * N_r(A)
    bool pass = false;
};

// Spot check that covering numbers survive r-expansion: N_r(A^r) <= C 2^d N_r(A).
ExpansionCheck covering_expansion_check(const MetricSpace& space, const std::vector<Point>& base,
                                        const std::vector<Point>& expanded, double r, double C,
                                        int d);

}  // namespace nnlab
