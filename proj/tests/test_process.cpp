#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nnlab/learner.hpp"
#include "nnlab/process.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

using namespace nnlab;

namespace {

std::vector<RoundRecord> no_records;

ProcessContext ctx_at(const std::vector<Point>& history, int n) {
    return make_context(history, no_records, n);
}

}  // namespace

TEST_CASE("worst threshold emits the alternating geometric stream") {
    MetricSpace sp = MetricSpace::make_interval(-1.0, 1.0);
    WorstThresholdGenerator gen(sp, 0);
    std::vector<Point> hist;
    Rng dummy(0);
    CHECK(gen.propose(ctx_at(hist, 1), dummy)[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK(gen.propose(ctx_at(hist, 2), dummy)[0] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    CHECK(gen.propose(ctx_at(hist, 3), dummy)[0] == doctest::Approx(-1.0 / 27.0).epsilon(1e-15));
    CHECK_FALSE(gen.has_declared_rate());
    CHECK_THROWS_AS(WorstThresholdGenerator(MetricSpace::make_interval(0.0, 1.0), 0),
                    std::invalid_argument);
}

TEST_CASE("sigma = 1 smoothing is bit-identical to the iid stream") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    IidGenerator iid(nu, 42);
    SmoothedGenerator smooth(nu, 1.0, AttackPolicy::midpoint_mistake, std::nullopt, 42);
    std::vector<Point> h1, h2;
    for (int n = 1; n <= 200; ++n) {
        Point a = iid.next_instance(ctx_at(h1, n));
        Point b = smooth.next_instance(ctx_at(h2, n));
        CHECK(a[0] == b[0]);  // exact, not approximate
        h1.push_back(a);
        h2.push_back(b);
    }
}

TEST_CASE("smoothed attack region has reference mass sigma") {
    MetricSpace sp = MetricSpace::unit_cube(MetricKind::sup, 2);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    SmoothedGenerator gen(nu, 0.25, AttackPolicy::fixed_focus, Point{0.5, 0.5}, 3);
    std::vector<Point> hist;
    auto region = gen.attack_region(ctx_at(hist, 1));
    REQUIRE(region.has_value());
    CHECK(nu.mass_of_box(*region).value == doctest::Approx(0.25).epsilon(1e-12));
    // side fraction sqrt(0.25) = 0.5 centered at the middle
    CHECK(region->lo[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(region->hi[0] == doctest::Approx(0.75).epsilon(1e-12));

    // Non-uniform reference measure: the window is grown by bisection
    // until its nu-mass reaches sigma.
    MetricSpace line = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure mix = ReferenceMeasure::mixture(
        line, {WeightedBox{Box{{0.0}, {0.5}}, 1.0}, WeightedBox{Box{{0.5}, {1.0}}, 3.0}});
    SmoothedGenerator gen2(mix, 0.3, AttackPolicy::fixed_focus, Point{0.25}, 3);
    auto r2 = gen2.attack_region(ctx_at(hist, 1));
    REQUIRE(r2.has_value());
    CHECK(mix.mass_of_box(*r2).value == doctest::Approx(0.3).epsilon(1e-6));
    for (int t = 0; t < 50; ++t) {
        Rng rng(100 + t);
        Point x = gen2.propose(ctx_at(hist, 1), rng);
        CHECK(r2->contains(x));
    }
}

TEST_CASE("attack regions shift into the domain instead of clipping") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    SmoothedGenerator gen(nu, 0.5, AttackPolicy::fixed_focus, Point{0.05}, 3);
    std::vector<Point> hist;
    auto region = gen.attack_region(ctx_at(hist, 1));
    REQUIRE(region.has_value());
    CHECK(region->lo[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(region->hi[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("midpoint policy recenters on the latest usable mistake") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    SmoothedGenerator gen(nu, 0.5, AttackPolicy::midpoint_mistake, std::nullopt, 3);

    std::vector<Point> hist{{0.2}, {0.8}};
    std::vector<RoundRecord> recs(2);
    recs[0].n = 1;
    recs[0].instance = {0.2};
    recs[0].mistake = true;  // abstention: no neighbor, must be skipped
    recs[1].n = 2;
    recs[1].instance = {0.8};
    recs[1].nn_index = 1;
    recs[1].nn_distance = 0.6;
    recs[1].predicted = 0;
    recs[1].truth = 1;
    recs[1].mistake = true;

    auto region = gen.attack_region(make_context(hist, recs, 3));
    REQUIRE(region.has_value());  // centered at (0.8 + 0.2) / 2 = 0.5
    CHECK(region->lo[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(region->hi[0] == doctest::Approx(0.75).epsilon(1e-12));

    // Without any usable mistake the window falls back to the domain center.
    auto fallback = gen.attack_region(make_context(hist, no_records, 3));
    REQUIRE(fallback.has_value());
    CHECK(fallback->lo[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("declared domination rates") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    IidGenerator iid(nu, 0);
    CHECK(iid.rate_epsilon(0.3) == doctest::Approx(0.3));
    CHECK(iid.rate_epsilon(2.0) == 1.0);
    SmoothedGenerator sm(nu, 0.1, AttackPolicy::fixed_focus, Point{0.5}, 0);
    CHECK(sm.rate_epsilon(0.02) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(sm.rate_epsilon(0.5) == 1.0);
    DominatedGenerator dom(nu, 0.4, 0.5, AttackPolicy::fixed_focus, Point{0.5}, 0);
    CHECK(dom.rate_epsilon(0.04) == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
    CHECK(dom.rate_epsilon(0.4) == doctest::Approx(1.0));
}

TEST_CASE("generator parameter validation") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    CHECK_THROWS_AS(
        SmoothedGenerator(nu, 0.0, AttackPolicy::fixed_focus, Point{0.5}, 0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        SmoothedGenerator(nu, 0.5, AttackPolicy::fixed_focus, Point{2.0}, 0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        DominatedGenerator(nu, 0.5, 1.0, AttackPolicy::fixed_focus, std::nullopt, 0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        DominatedGenerator(nu, 0.5, 0.0, AttackPolicy::fixed_focus, std::nullopt, 0),
        std::invalid_argument);
    ReferenceMeasure mix = ReferenceMeasure::mixture(
        sp, {WeightedBox{Box{{0.0}, {0.5}}, 1.0}, WeightedBox{Box{{0.5}, {1.0}}, 1.0}});
    CHECK_THROWS_AS(
        DominatedGenerator(mix, 0.5, 0.5, AttackPolicy::fixed_focus, std::nullopt, 0),
        std::invalid_argument);
}

TEST_CASE("dominated stream stays in-domain and is seed-reproducible") {
    MetricSpace sp = MetricSpace::unit_cube(MetricKind::sup, 2);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    DominatedGenerator a(nu, 0.2, 0.5, AttackPolicy::fixed_focus, Point{0.3, 0.7}, 9);
    DominatedGenerator b(nu, 0.2, 0.5, AttackPolicy::fixed_focus, Point{0.3, 0.7}, 9);
    std::vector<Point> hist;
    for (int n = 1; n <= 300; ++n) {
        Point x = a.next_instance(ctx_at(hist, n));
        Point y = b.next_instance(ctx_at(hist, n));
        CHECK(sp.in_domain(x));
        CHECK(x == y);
        hist.push_back(x);
    }
}

TEST_CASE("worst general forces a mistake on round one and every even round") {
    MetricSpace sp = MetricSpace::make_interval(-1.0, 1.0);
    auto eta = std::make_shared<ThresholdLabel>(sp, 0.0);
    WorstGeneralGenerator gen(eta, 0);
    NearestNeighborLearner learner(sp, LearnerBackend::brute);

    std::vector<Point> hist;
    std::vector<RoundRecord> recs;
    for (int n = 1; n <= 24; ++n) {
        Point x = gen.next_instance(make_context(hist, recs, n));
        RoundRecord rec = learner.predict_and_update(x, *eta);
        recs.push_back(rec);
        hist.push_back(x);
    }
    CHECK(recs[0].mistake);  // abstention
    for (int n = 2; n <= 24; n += 2) CHECK(recs[n - 1].mistake);

    // Pair structure: rounds (2k-1, 2k) carry opposite labels and sit
    // closer than a third of the previous minimum separation.
    double r = sp.diameter();
    for (int k = 1; 2 * k <= 24; ++k) {
        const Point& u = hist[2 * k - 2];
        const Point& v = hist[2 * k - 1];
        CHECK(eta->label(u) != eta->label(v));
        double d = distance(sp, u, v);
        CHECK(d > 0.0);
        CHECK(d < r / 3.0);
        // update the running minimum nonzero separation
        for (std::size_t i = 0; i + 1 < hist.size() && i < std::size_t(2 * k); ++i)
            for (std::size_t j = i + 1; j < std::size_t(2 * k); ++j) {
                double dij = distance(sp, hist[i], hist[j]);
                if (dij > 0.0 && dij < r) r = dij;
            }
    }

    CHECK_THROWS_AS(
        WorstGeneralGenerator(
            std::make_shared<FractalBoundaryLabel>(
                MetricSpace::unit_cube(MetricKind::euclidean, 2), 4, 0.5, 0.2, 1),
            0),
        std::invalid_argument);
}

TEST_CASE("indicator process kinds") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    IndicatorProcess none = IndicatorProcess::none();
    CHECK(none.kind() == IndicatorProcess::Kind::none);
    CHECK_FALSE(none.flag({0.5}, 1));

    IndicatorProcess region = IndicatorProcess::region(Box{{0.2}, {0.4}});
    CHECK(region.kind() == IndicatorProcess::Kind::region);
    CHECK(region.flag({0.3}, 7));
    CHECK_FALSE(region.flag({0.5}, 7));

    IndicatorProcess stream = IndicatorProcess::stream({0, 1, 1});
    CHECK_FALSE(stream.flag({0.9}, 1));
    CHECK(stream.flag({0.9}, 2));
    CHECK(stream.flag({0.9}, 3));
    CHECK_FALSE(stream.flag({0.9}, 4));  // past the recorded flags
}

TEST_CASE("indicator statistics: counter, stopping times, rate") {
    IndicatorStats st = indicator_stats({0, 1, 1, 0, 1});
    CHECK(st.k == std::vector<long>{0, 1, 2, 2, 3});
    CHECK(st.tau == std::vector<int>{2, 3, 5});
    CHECK(st.rate == doctest::Approx(0.6));
    CHECK(st.tau_k(1) == 2);
    CHECK(st.tau_k(2) == 3);
    CHECK(st.tau_k(3) == 5);
    CHECK_FALSE(st.tau_k(4).has_value());
    CHECK_FALSE(st.tau_k(0).has_value());

    IndicatorStats empty = indicator_stats({});
    CHECK(empty.k.empty());
    CHECK(empty.rate == 0.0);
}

TEST_CASE("centered mass windows have exact mass and contain the center") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    Box w = centered_mass_window(sp, {0.05}, 0.2);
    CHECK(w.lo[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w.hi[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(w.contains({0.05}));

    MetricSpace wide = MetricSpace::make_interval(-1.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(wide);
    Box w2 = centered_mass_window(wide, {0.9}, 0.25);
    CHECK(nu.mass_of_box(w2).value == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(w2.hi[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w2.contains({0.9}));

    MetricSpace sq = MetricSpace::unit_cube(MetricKind::sup, 2);
    Box w3 = centered_mass_window(sq, {0.5, 0.5}, 0.09);
    CHECK(w3.hi[0] - w3.lo[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(w3.hi[1] - w3.lo[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("smoothness audit upholds a declared rate") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    SmoothedGenerator gen(nu, 0.5, AttackPolicy::fixed_focus, Point{0.5}, 21);
    std::vector<Point> hist;
    for (int n = 1; n <= 12; ++n) hist.push_back(gen.next_instance(ctx_at(hist, n)));

    std::vector<Box> sets{centered_mass_window(sp, {0.5}, 0.2),
                          centered_mass_window(sp, {0.1}, 0.3)};
    SmoothnessReport rep = smoothness_audit(gen, nu, hist, no_records, sets, 400, 2, 5);
    CHECK(rep.declared);
    CHECK(rep.pass);
    REQUIRE(rep.sets.size() == 2);
    for (const auto& s : rep.sets) {
        CHECK(s.dominated);
        CHECK(s.worst_rate <= s.bound);
    }
    CHECK(rep.sets[0].mass == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("smoothness audit flags an undeclared concentrated process") {
    MetricSpace sp = MetricSpace::make_interval(-1.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);
    WorstThresholdGenerator gen(sp, 0);
    std::vector<Point> hist;
    for (int n = 1; n <= 6; ++n) hist.push_back(gen.next_instance(ctx_at(hist, n)));

    // A tiny window around X_3 = -1/27: the deterministic continuation at
    // the length-2 prefix always lands inside it.
    std::vector<Box> sets{Box{{-0.05}, {-0.03}}};
    SmoothnessReport rep = smoothness_audit(gen, nu, hist, no_records, sets, 8, 1, 5);
    CHECK_FALSE(rep.declared);
    CHECK(rep.pass);  // vacuous: nothing declared, nothing violated
    REQUIRE(rep.sets.size() == 1);
    CHECK(rep.sets[0].worst_rate == doctest::Approx(1.0));
    CHECK(rep.sets[0].mass == doctest::Approx(0.01).epsilon(1e-12));
    CHECK_FALSE(rep.sets[0].dominated);
}
