#include "nnlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nnlab {

ReferenceMeasure ReferenceMeasure::lebesgue(const MetricSpace& space) {
    ReferenceMeasure m;
    m.kind_ = Kind::lebesgue_box;
    m.space_ = space;
    m.parts_ = {WeightedBox{space.domain, 1.0}};
    m.cum_weight_ = {1.0};
    return m;
}

ReferenceMeasure ReferenceMeasure::mixture(const MetricSpace& space, std::vector<WeightedBox> parts) {
    if (parts.empty()) throw std::invalid_argument("mixture: needs at least one component");
    double total = 0.0;
    for (const auto& p : parts) {
        if (p.box.dim() != static_cast<std::size_t>(space.dim))
            throw std::invalid_argument("mixture: component dimension mismatch");
        if (p.weight <= 0.0) throw std::invalid_argument("mixture: weights must be positive");
        if (p.box.volume() <= 0.0) throw std::invalid_argument("mixture: degenerate component box");
        for (int i = 0; i < space.dim; ++i)
            if (p.box.lo[i] < space.domain.lo[i] || p.box.hi[i] > space.domain.hi[i])
                throw std::invalid_argument("mixture: component box leaves the domain");
        total += p.weight;
    }
    ReferenceMeasure m;
    m.kind_ = Kind::box_mixture;
    m.space_ = space;
    double cum = 0.0;
    for (auto& p : parts) {
        p.weight /= total;  // normalize to total mass 1
        cum += p.weight;
        m.cum_weight_.push_back(cum);
    }
    m.parts_ = std::move(parts);
    m.cum_weight_.back() = 1.0;
    return m;
}

MassEstimate ReferenceMeasure::mass_of_box(const Box& b) const {
    if (b.dim() != static_cast<std::size_t>(space_.dim))
        throw std::invalid_argument("mass_of_box: dimension mismatch");
    double mass = 0.0;
    for (const auto& p : parts_) {
        mass += p.weight * (p.box.overlap_volume(b) / p.box.volume());
    }
    return MassEstimate{mass, 0.0, 0, true};
}

MassEstimate ReferenceMeasure::mass_of_ball(const Ball& b, std::int64_t mc_samples,
                                            std::uint64_t seed) const {
    if (auto box = ball_as_box(space_, b)) {
        return mass_of_box(*box);
    }
    const MetricSpace& sp = space_;
    return mass_of_indicator([&](const Point& x) { return b.contains(sp, x); }, mc_samples, seed);
}

MassEstimate ReferenceMeasure::mass_of_indicator(const std::function<bool(const Point&)>& f,
                                                 std::int64_t n_samples, std::uint64_t seed) const {
    if (n_samples <= 0) throw std::invalid_argument("mass_of_indicator: needs n_samples > 0");
    Rng rng(seed);
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        if (f(sample(rng))) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n_samples);
    const double se = std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n_samples));
    return MassEstimate{p, se, n_samples, false};
}

MassEstimate ReferenceMeasure::mass_of_ball_union(const std::vector<Ball>& balls,
                                                  std::int64_t mc_samples, std::uint64_t seed) const {
    if (balls.empty()) return MassEstimate{0.0, 0.0, 0, true};
    if (space_.dim == 1) {
        // Exact: merge intervals, then take box masses piece by piece.
        std::vector<std::pair<double, double>> iv;
        iv.reserve(balls.size());
        for (const auto& b : balls) {
            const double lo = std::max(space_.domain.lo[0], b.center[0] - b.radius);
            const double hi = std::min(space_.domain.hi[0], b.center[0] + b.radius);
            if (hi > lo) iv.emplace_back(lo, hi);
        }
        std::sort(iv.begin(), iv.end());
        double mass = 0.0;
        std::size_t i = 0;
        while (i < iv.size()) {
            double lo = iv[i].first, hi = iv[i].second;
            std::size_t j = i + 1;
            while (j < iv.size() && iv[j].first <= hi) {
                hi = std::max(hi, iv[j].second);
                ++j;
            }
            mass += mass_of_box(Box{{lo}, {hi}}).value;
            i = j;
        }
        return MassEstimate{mass, 0.0, 0, true};
    }
    const MetricSpace& sp = space_;
    return mass_of_indicator(
        [&](const Point& x) {
            for (const auto& b : balls)
                if (b.contains(sp, x)) return true;
            return false;
        },
        mc_samples, seed);
}

Point ReferenceMeasure::sample(Rng& rng) const {
    std::size_t part = 0;
    if (parts_.size() > 1) {
        const double u = rng.uniform();
        part = static_cast<std::size_t>(
            std::lower_bound(cum_weight_.begin(), cum_weight_.end(), u) - cum_weight_.begin());
        part = std::min(part, parts_.size() - 1);
    }
    const Box& b = parts_[part].box;
    Point x(b.dim());
    for (std::size_t i = 0; i < b.dim(); ++i) x[i] = rng.uniform(b.lo[i], b.hi[i]);
    return x;
}

double interval_union_length(std::vector<std::pair<double, double>> intervals) {
    std::sort(intervals.begin(), intervals.end());
    double len = 0.0;
    double cur_lo = 0.0, cur_hi = -1.0;
    bool open = false;
    for (const auto& [lo, hi] : intervals) {
        if (hi <= lo) continue;
        if (!open || lo > cur_hi) {
            if (open) len += cur_hi - cur_lo;
            cur_lo = lo;
            cur_hi = hi;
            open = true;
        } else {
            cur_hi = std::max(cur_hi, hi);
        }
    }
    if (open) len += cur_hi - cur_lo;
    return len;
}

DoublingReport certify_upper_doubling(const ReferenceMeasure& measure, double c, int d,
                                      int n_trials, std::uint64_t seed) {
    if (c <= 0.0 || d <= 0) throw std::invalid_argument("certify_upper_doubling: bad (c, d)");
    if (n_trials <= 0) throw std::invalid_argument("certify_upper_doubling: needs n_trials > 0");
    const MetricSpace& sp = measure.space();
    const double diam = sp.diameter();

    DoublingReport rep;
    Rng rng(seed);

    auto check = [&](const Point& x, double radius) {
        const Ball b{x, radius};
        const MassEstimate m = measure.mass_of_ball(b, 100000, derive_seed(seed, rep.n_checked, 7));
        const double r_scaled = radius / diam;  // radii in units of the diameter
        const double bound = c * std::pow(r_scaled, static_cast<double>(d));
        // Exact masses still carry one-ulp rounding from the interval
        // endpoints, so a tight constant needs a hair of relative slack.
        const double allowance = m.exact ? 1e-12 * bound : 3.0 * m.stderr_;
        const double ratio = bound > 0.0 ? m.value / bound : 0.0;
        ++rep.n_checked;
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_ball = b;
            rep.worst_mass = m.value;
        }
        if (m.value > bound + allowance) rep.pass = false;
    };

    // Deterministic sweep: grid centers x grid radii, so coarse violations
    // are found regardless of the seed.
    const int per_axis = sp.dim == 1 ? 17 : 5;
    std::vector<Point> grid;
    if (sp.dim == 1) {
        for (int i = 0; i < per_axis; ++i) {
            const double t = (i + 0.5) / per_axis;
            grid.push_back({sp.domain.lo[0] + t * (sp.domain.hi[0] - sp.domain.lo[0])});
        }
    } else {
        for (int i = 0; i < per_axis; ++i)
            for (int j = 0; j < per_axis; ++j) {
                Point x(sp.dim, 0.0);
                x[0] = sp.domain.lo[0] + (i + 0.5) / per_axis * (sp.domain.hi[0] - sp.domain.lo[0]);
                x[1] = sp.domain.lo[1] + (j + 0.5) / per_axis * (sp.domain.hi[1] - sp.domain.lo[1]);
                for (int k = 2; k < sp.dim; ++k)
                    x[k] = 0.5 * (sp.domain.lo[k] + sp.domain.hi[k]);
                grid.push_back(x);
            }
    }
    for (const auto& x : grid)
        for (int rj = 1; rj <= 8; ++rj) check(x, diam * rj / 16.0);

    // Random (x, r) pairs: x from the measure, r uniform in (0, diam].
    for (int t = 0; t < n_trials; ++t) {
        const Point x = measure.sample(rng);
        const double r = diam * (rng.uniform() * 0.999 + 0.001);
        check(x, r);
    }
    if (!rep.pass) rep.note = "found ball with mass above c*r^d";
    return rep;
}

}  // namespace nnlab
