#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nnlab/geometry.hpp"
#include "nnlab/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace nnlab;

namespace {

std::vector<Point> segment_sample(int n) {
    std::vector<Point> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) pts.push_back({static_cast<double>(i) / (n - 1)});
    return pts;
}

std::vector<Point> grid_sample(int per_axis) {
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(per_axis) * per_axis);
    for (int i = 0; i < per_axis; ++i)
        for (int j = 0; j < per_axis; ++j)
            pts.push_back({static_cast<double>(i) / (per_axis - 1),
                           static_cast<double>(j) / (per_axis - 1)});
    return pts;
}

}  // namespace

TEST_CASE("greedy net counts on a three-point set") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    std::vector<Point> pts{{0.0}, {0.5}, {1.0}};
    // r = 0.4: each point can only be covered by itself, any order.
    CHECK(net_cover_count(sp, pts, 0.4) == 3);
    CHECK(net_cover_count(sp, pts, 0.05) == 3);
    CHECK(net_cover_count(sp, pts, 1.0) == 1);
    CHECK(net_cover_count(sp, {}, 0.3) == 0);

    long prev = 1000;
    for (double r : {0.05, 0.3, 0.6, 1.2}) {
        long c = net_cover_count(sp, pts, r);
        CHECK(c <= prev);
        prev = c;
    }
}

TEST_CASE("median nearest-neighbor spacing") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    CHECK(median_nn_spacing(sp, {{0.0}, {0.25}, {0.75}, {1.0}}) == doctest::Approx(0.25));
    CHECK(median_nn_spacing(sp, {{0.0}, {0.1}, {0.5}, {1.0}}) == doctest::Approx(0.4));
    CHECK(median_nn_spacing(sp, {{0.4}}) == 0.0);
    CHECK(median_nn_spacing(sp, {}) == 0.0);
}

TEST_CASE("box dimension of a segment is about one") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    BoxDimensionEstimate est = box_dimension_estimate(sp, segment_sample(2048));
    CHECK(est.slope > 0.85);
    CHECK(est.slope < 1.15);
    CHECK(est.radii.size() == est.counts.size());
    REQUIRE(est.radii.size() >= 3);
    for (std::size_t i = 1; i < est.counts.size(); ++i) CHECK(est.counts[i] >= est.counts[i - 1]);
}

TEST_CASE("box dimension of a filled square is about two") {
    MetricSpace sq = MetricSpace::unit_cube(MetricKind::sup, 2);
    BoxDimensionEstimate est = box_dimension_estimate(sq, grid_sample(128));
    CHECK(est.slope > 1.8);
    CHECK(est.slope < 2.2);
    CHECK(est.truncated);  // the schedule stops where the grid gets sparse
    CHECK_FALSE(est.note.empty());
}

TEST_CASE("box dimension edge cases") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    BoxDimensionEstimate empty = box_dimension_estimate(sp, {});
    CHECK(empty.slope == 0.0);
    CHECK(empty.note == "empty sample");
    BoxDimensionEstimate one = box_dimension_estimate(sp, {{0.5}});
    CHECK(one.slope == 0.0);
    for (long c : one.counts) CHECK(c == 1);
    CHECK_THROWS_AS(box_dimension_estimate(sp, {{0.5}}, 5, 2), std::invalid_argument);
}

TEST_CASE("one-dimensional Minkowski content is exact") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sp);

    MinkowskiEstimate single = minkowski_content_estimate(sp, {{0.5}}, nu);
    CHECK(single.exact);
    CHECK(single.content == doctest::Approx(2.0).epsilon(1e-12));
    for (double v : single.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
    for (double s : single.stderrs) CHECK(s == 0.0);

    MinkowskiEstimate pair = minkowski_content_estimate(sp, {{0.25}, {0.75}}, nu);
    CHECK(pair.content == doctest::Approx(4.0).epsilon(1e-12));

    // Normalized measure on [-1, 1]: a single boundary point contributes
    // mass r per radius r, so the content is exactly 1.
    MetricSpace wide = MetricSpace::make_interval(-1.0, 1.0);
    ReferenceMeasure nu2 = ReferenceMeasure::lebesgue(wide);
    MinkowskiEstimate thr = minkowski_content_estimate(wide, {{0.0}}, nu2);
    CHECK(thr.exact);
    CHECK(thr.content == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-dimensional Minkowski content of the diagonal") {
    MetricSpace sq = MetricSpace::unit_cube(MetricKind::sup, 2);
    ReferenceMeasure nu = ReferenceMeasure::lebesgue(sq);
    std::vector<Point> diag;
    for (int i = 0; i <= 2000; ++i) {
        double t = i / 2000.0;
        diag.push_back({t, t});
    }
    // Under the sup metric the r-expansion is {|x - y| <= 2r} with mass
    // 4r - 4r^2, so nu(A^r)/r = 4 - 4r.
    MinkowskiEstimate est = minkowski_content_estimate(sq, diag, nu, 2, 5, 40000, 9);
    CHECK_FALSE(est.exact);
    REQUIRE(est.radii.size() == 4);
    for (std::size_t i = 0; i < est.radii.size(); ++i) {
        double r = est.radii[i];
        CHECK(est.values[i] == doctest::Approx(4.0 - 4.0 * r).epsilon(0.05));
        CHECK(est.stderrs[i] > 0.0);
    }
    CHECK(est.content == doctest::Approx(4.0 - 4.0 * est.r_used).epsilon(0.05));
}

TEST_CASE("rate curve optimizer closed form") {
    RateCurveParams prm;  // sigma 1, alpha 1, b 1, m 1, c1 c2 0.5, C 1
    CHECK(rate_curve_rstar(100.0, prm) == doctest::Approx(std::pow(100.0, -0.4)).epsilon(1e-12));
    RateCurveParams other;
    other.sigma = 0.5;
    other.b_hat = 1.5;
    other.m_hat = 1.5;
    other.C = 2.0;
    CHECK(rate_curve_rstar(64.0, other) == doctest::Approx(std::pow(64.0, -1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("rate curve bound is capped by N and responds to N and sigma") {
    RateCurveParams prm;
    prm.sigma = 0.1;
    for (double n : {10.0, 100.0, 10000.0}) CHECK(rate_curve_bound(n, prm) <= n);
    CHECK(rate_curve_bound(200.0, prm) <= rate_curve_bound(2000.0, prm));
    RateCurveParams gentle = prm;
    gentle.sigma = 0.8;
    CHECK(rate_curve_bound(1000.0, gentle) <= rate_curve_bound(1000.0, prm));
    CHECK(rate_curve_bound(1000.0, prm) > 0.0);

    CHECK_THROWS_AS(rate_curve_bound(0.5, prm), std::invalid_argument);
    RateCurveParams bad = prm;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(rate_curve_bound(100.0, bad), std::invalid_argument);
    RateCurveParams flat = prm;
    flat.b_hat = 0.0;
    flat.c1 = 0.0;
    CHECK_THROWS_AS(rate_curve_bound(100.0, flat), std::invalid_argument);
    flat.c1 = 0.5;  // a zero-dimensional boundary with positive slack is fine
    CHECK_NOTHROW(rate_curve_bound(100.0, flat));
}

TEST_CASE("fitting the covering constant") {
    CHECK(fit_rate_constant({0.5, 0.25}, {4.0, 16.0}, 2.0) == doctest::Approx(1.0));
    CHECK(fit_rate_constant({0.5, 0.25}, {5.0, 16.0}, 2.0) == doctest::Approx(1.25));
    CHECK_THROWS_AS(fit_rate_constant({0.5}, {1.0, 2.0}, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate_constant({}, {}, 2.0), std::invalid_argument);
}

TEST_CASE("covering numbers survive r-expansion") {
    MetricSpace sq = MetricSpace::unit_cube(MetricKind::sup, 2);
    std::vector<Point> base;
    for (int i = 0; i <= 400; ++i) {
        double t = i / 400.0;
        base.push_back({t, t});
    }
    std::vector<Point> expanded;
    Rng rng(5);
    while (expanded.size() < 4000) {
        Point x{rng.uniform(), rng.uniform()};
        double d = 0.5 * std::fabs(x[0] - x[1]);  // sup distance to the diagonal
        if (d <= 0.1) expanded.push_back(x);
    }
    ExpansionCheck chk = covering_expansion_check(sq, base, expanded, 0.1, 2.0, 2);
    CHECK(chk.pass);
    CHECK(chk.lhs >= net_cover_count(sq, base, 0.1));
    CHECK(chk.rhs == static_cast<long>(std::ceil(8.0 * net_cover_count(sq, base, 0.1))));
}
