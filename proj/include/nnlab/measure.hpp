#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nnlab/metric.hpp"
#include "nnlab/rng.hpp"

namespace nnlab {

// Every mass query returns the estimate together with how it was
// obtained. `exact` estimates have stderr 0; Monte Carlo estimates carry
// the binomial standard error sqrt(p(1-p)/n) scaled by the total mass.
struct MassEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::int64_t n_samples = 0;
    bool exact = true;
};

struct WeightedBox {
    Box box;
    double weight = 1.0;
};

// Reference probability measure on the domain box: either normalized
// Lebesgue on the box, or a weighted mixture of sub-boxes (weights
// normalized to total mass 1).
class ReferenceMeasure {
public:
    enum class Kind { lebesgue_box, box_mixture };

    static ReferenceMeasure lebesgue(const MetricSpace& space);
    static ReferenceMeasure mixture(const MetricSpace& space, std::vector<WeightedBox> parts);

    Kind kind() const { return kind_; }
    const MetricSpace& space() const { return space_; }
    double total_mass() const { return 1.0; }

    // Exact: clipped-box volume against the mixture components.
    MassEstimate mass_of_box(const Box& b) const;

    // Exact for sup-norm / interval balls (which are boxes); Monte Carlo
    // with `mc_samples` draws otherwise.
    MassEstimate mass_of_ball(const Ball& b, std::int64_t mc_samples = 200000,
                              std::uint64_t seed = 0x5EEDull) const;

    // Monte Carlo mass of {x : f(x) != 0} with binomial stderr.
    MassEstimate mass_of_indicator(const std::function<bool(const Point&)>& f,
                                   std::int64_t n_samples, std::uint64_t seed) const;

    // Mass of a union of balls: exact via interval merging in 1-D,
    // Monte Carlo otherwise.
    MassEstimate mass_of_ball_union(const std::vector<Ball>& balls, std::int64_t mc_samples = 200000,
                                    std::uint64_t seed = 0x5EEDull) const;

    // One draw from the measure.
    Point sample(Rng& rng) const;

private:
    Kind kind_ = Kind::lebesgue_box;
    MetricSpace space_;
    std::vector<WeightedBox> parts_;   // normalized weights; single full-box part for lebesgue
    std::vector<double> cum_weight_;   // cumulative weights for sampling
};

// Exact total length of a union of 1-D intervals [lo, hi].
double interval_union_length(std::vector<std::pair<double, double>> intervals);

// Empirical check of the upper-doubling property
//   nu(B(x, r)) <= c * r^d
// for radii in units of the domain diameter. Random (x, r) pairs plus a
// deterministic grid sweep; Monte Carlo masses get a 3*stderr allowance.
struct DoublingReport {
    bool pass = true;
    double worst_ratio = 0.0;  // max over samples of mass / (c r^d)
    Ball worst_ball;
    double worst_mass = 0.0;
    int n_checked = 0;
    std::string note;
};

DoublingReport certify_upper_doubling(const ReferenceMeasure& measure, double c, int d,
                                      int n_trials, std::uint64_t seed);

}  // namespace nnlab
