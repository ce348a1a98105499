#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nnlab/labels.hpp"
#include "nnlab/learner.hpp"
#include "nnlab/measure.hpp"
#include "nnlab/metric.hpp"

namespace nnlab {

enum class ProcessClass {
    iid,              // nu-distributed, fresh each round
    smoothed,         // conditional density <= 1/sigma against nu
    dominated,        // uniformly dominated at rate eps(delta) = min(1, (delta/sigma)^alpha)
    worst_threshold,  // deterministic alternating stream (-1/3)^n
    worst_general,    // adaptive cross-class pair adversary
};

ProcessClass process_class_from_string(const std::string& s);
std::string to_string(ProcessClass c);

// Read-only view of the run so far, handed to generators each round.
// `history` is X_{<n}; `records` is the learner's public trace (may be
// absent for oblivious processes); `n` is the 1-based round about to be
// generated.
struct ProcessContext {
    const Point* history = nullptr;
    std::size_t history_len = 0;
    const RoundRecord* records = nullptr;
    std::size_t records_len = 0;
    int n = 1;
    // Optional accelerator maintained by the live trial loop: index of the
    // most recent record with (mistake && nn_index), or -1 if none exists.
    // When mistake_hint is false, generators scan `records` themselves.
    bool mistake_hint = false;
    std::ptrdiff_t last_usable_mistake = -1;
};

ProcessContext make_context(const std::vector<Point>& history,
                            const std::vector<RoundRecord>& records, int n);

// Where adaptive attack regions are centered.
enum class AttackPolicy {
    midpoint_mistake,  // midpoint of the last mistaken instance and its neighbor
    fixed_focus,       // always the configured focus point
};

// A generator produces the next instance given the visible context.
// `propose` is a pure conditional sample (used both for the live stream
// and for resampled continuations in audits); `next_instance` draws from
// the generator's own seeded stream. Streams are bit-identical given the
// same seed, config and context sequence.
class ProcessGenerator {
public:
    virtual ~ProcessGenerator() = default;

    virtual Point propose(const ProcessContext& ctx, Rng& rng) const = 0;
    Point next_instance(const ProcessContext& ctx) { return propose(ctx, rng_); }

    ProcessClass cls() const { return cls_; }
    // Declared uniform-domination rate eps(delta), when the class has one.
    virtual bool has_declared_rate() const { return false; }
    virtual double rate_epsilon(double) const { return 1.0; }
    // The attack region for the coming round, when the class uses one.
    virtual std::optional<Box> attack_region(const ProcessContext&) const { return std::nullopt; }

protected:
    ProcessGenerator(ProcessClass cls, std::uint64_t seed) : cls_(cls), rng_(seed) {}
    ProcessClass cls_;
    Rng rng_;
};

// Fresh nu-sample each round; uniformly dominated at eps(delta) = delta.
class IidGenerator : public ProcessGenerator {
public:
    IidGenerator(ReferenceMeasure measure, std::uint64_t seed);
    Point propose(const ProcessContext&, Rng& rng) const override;
    bool has_declared_rate() const override { return true; }
    double rate_epsilon(double delta) const override;

private:
    ReferenceMeasure measure_;
};

// Extremal sigma-smoothed adversary: each round it picks an attack box of
// nu-mass exactly sigma (a per-axis window shifted to fit the domain,
// centered via the policy) and emits a nu-uniform draw from it. The
// conditional density is 1{region}/sigma <= 1/sigma, so
// eps(delta) = min(1, delta/sigma). sigma = 1 recovers the iid process.
class SmoothedGenerator : public ProcessGenerator {
public:
    SmoothedGenerator(ReferenceMeasure measure, double sigma, AttackPolicy policy,
                      std::optional<Point> focus, std::uint64_t seed);
    Point propose(const ProcessContext& ctx, Rng& rng) const override;
    bool has_declared_rate() const override { return true; }
    double rate_epsilon(double delta) const override;
    std::optional<Box> attack_region(const ProcessContext& ctx) const override;
    double sigma() const { return sigma_; }

private:
    ReferenceMeasure measure_;
    double sigma_;
    AttackPolicy policy_;
    std::optional<Point> focus_;
};

// Uniformly dominated beyond the smoothed class: a dyadic mixture over
// nested attack boxes R_0 (the domain) .. R_J with nu(R_j) = 2^-j, all
// centered via the policy. Level j is drawn with tail probability
// q_j = min(1, (2^-j / sigma)^alpha) and the point is nu-uniform on the
// annulus R_j \ R_{j+1} (the deepest level uses all of R_J). Because
// delta -> (delta/sigma)^alpha is concave and the greedy worst-case set
// fills the densest annuli first, every conditional satisfies
// Pr(X in A) <= (nu(A)/sigma)^alpha exactly; no single sigma' makes the
// density bounded, so the process is not smoothed.
class DominatedGenerator : public ProcessGenerator {
public:
    DominatedGenerator(ReferenceMeasure measure, double sigma, double alpha, AttackPolicy policy,
                       std::optional<Point> focus, std::uint64_t seed);
    Point propose(const ProcessContext& ctx, Rng& rng) const override;
    bool has_declared_rate() const override { return true; }
    double rate_epsilon(double delta) const override;

private:
    ReferenceMeasure measure_;
    double sigma_;
    double alpha_;
    AttackPolicy policy_;
    std::optional<Point> focus_;
    int levels_ = 30;
};

// Deterministic worst-case stream for the threshold label on [-1, 1]:
// X_n = (-1/3)^n. The nearest stored instance of X_{n+1} is always X_n,
// whose label differs, so the rule errs every round.
class WorstThresholdGenerator : public ProcessGenerator {
public:
    WorstThresholdGenerator(const MetricSpace& space, std::uint64_t seed);
    Point propose(const ProcessContext& ctx, Rng&) const override;
};

// History-adaptive adversary realizing the general nonconvergence
// construction: with r the smallest nonzero interpoint distance of the
// emitted history, ask the label family for a cross-class pair at
// distance < r/3 and emit it over two rounds, ordered so the second
// element is guaranteed to be mispredicted. Requires a family with a
// cross-class pair oracle. Pair separations shrink geometrically, so the
// stream exhausts double precision after roughly 600 pairs.
class WorstGeneralGenerator : public ProcessGenerator {
public:
    WorstGeneralGenerator(std::shared_ptr<const LabelFunction> eta, std::uint64_t seed);
    Point propose(const ProcessContext& ctx, Rng&) const override;

private:
    std::pair<Point, Point> make_pair(const Point* hist, std::size_t len) const;
    double min_separation(const Point* hist, std::size_t len) const;

    std::shared_ptr<const LabelFunction> eta_;
    // All callers feed prefixes of one trajectory, so the minimal nonzero
    // interpoint distance can be maintained incrementally instead of
    // rescanning all pairs each round. seen_ holds the verified prefix and
    // rcum_[L] the minimum over its first L points.
    mutable std::vector<Point> seen_;
    mutable std::vector<double> rcum_;
};

// ---------------------------------------------------------------------
// Indicator processes and their statistics.

class IndicatorProcess {
public:
    enum class Kind { none, region, stream };

    static IndicatorProcess none();
    static IndicatorProcess region(Box b);
    static IndicatorProcess stream(std::vector<std::uint8_t> flags);

    Kind kind() const { return kind_; }
    const Box& box() const { return box_; }
    bool flag(const Point& x, int n) const;  // n is 1-based

private:
    Kind kind_ = Kind::none;
    Box box_;
    std::vector<std::uint8_t> flags_;
};

// Counter k(n), stopping times tau_k = min{n : k(n) >= k} for
// k = 1..k(N), and the final rate k(N)/N.
struct IndicatorStats {
    std::vector<long> k;
    std::vector<int> tau;
    double rate = 0.0;

    std::optional<int> tau_k(int kk) const {
        if (kk < 1 || kk > static_cast<int>(tau.size())) return std::nullopt;
        return tau[kk - 1];
    }
};

IndicatorStats indicator_stats(const std::vector<std::uint8_t>& flags);

// Axis-aligned window of the given Lebesgue-fraction mass containing
// `center`, shifted (not clipped) into the domain. The building block of
// the smoothed/dominated attack regions, exported for audit test sets.
Box centered_mass_window(const MetricSpace& space, const Point& center, double mass);

// ---------------------------------------------------------------------
// Smoothness audit: estimates sup_n Pr(X_n in A | history prefix) by
// resampling continuations at (strided) prefixes of a recorded run and
// compares against the declared eps(nu(A)) with a 5*stderr Monte Carlo
// allowance (the slack absorbs the max over all prefix/set cells). For
// classes without a declared rate the audit is informational: it reports
// the observed rate and flags the process as not dominated when the
// bound that *would* apply is exceeded.
struct SmoothnessSetReport {
    Box region;
    double mass = 0.0;
    double worst_rate = 0.0;
    int worst_round = 0;
    double bound = 0.0;    // eps(mass) + 5*stderr (when a rate is declared)
    bool dominated = true; // worst_rate within bound
};

struct SmoothnessReport {
    bool declared = false;  // the class declares a rate
    bool pass = true;       // declared rate upheld (vacuous when !declared)
    std::vector<SmoothnessSetReport> sets;
};

SmoothnessReport smoothness_audit(const ProcessGenerator& gen, const ReferenceMeasure& measure,
                                  const std::vector<Point>& history,
                                  const std::vector<RoundRecord>& records,
                                  const std::vector<Box>& sets, int trials_per_round, int stride,
                                  std::uint64_t seed);

}  // namespace nnlab
