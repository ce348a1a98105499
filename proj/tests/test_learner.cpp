#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nnlab/learner.hpp"
#include "nnlab/process.hpp"
#include "nnlab/rng.hpp"

#include <memory>
#include <stdexcept>

using namespace nnlab;

TEST_CASE("round one is an abstention and counts as a mistake") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ThresholdLabel eta(sp, 0.5);
    for (LearnerBackend b : {LearnerBackend::brute, LearnerBackend::cover_tree}) {
        NearestNeighborLearner learner(sp, b);
        RoundRecord rec = learner.predict_and_update({0.8}, eta);
        CHECK(rec.n == 1);
        CHECK_FALSE(rec.nn_index.has_value());
        CHECK_FALSE(rec.nn_distance.has_value());
        CHECK_FALSE(rec.predicted.has_value());
        CHECK(rec.truth == 1);
        CHECK(rec.mistake);
        CHECK(learner.rounds() == 1);
    }
}

TEST_CASE("prediction is the nearest stored label, lowest round on ties") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ThresholdLabel eta(sp, 0.5);
    for (LearnerBackend b : {LearnerBackend::brute, LearnerBackend::cover_tree}) {
        NearestNeighborLearner learner(sp, b);
        learner.predict_and_update({0.25}, eta);
        learner.predict_and_update({0.75}, eta);
        // Dyadic instances so the distances tie exactly in doubles.
        RoundRecord rec = learner.predict_and_update({0.5}, eta);
        CHECK(rec.nn_index == 1);
        CHECK(rec.nn_distance == 0.25);
        CHECK(rec.predicted == 0);
        CHECK(rec.truth == 1);
        CHECK(rec.mistake);

        RoundRecord near = learner.predict_and_update({0.6875}, eta);
        CHECK(near.nn_index == 2);
        CHECK(near.predicted == 1);
        CHECK_FALSE(near.mistake);
    }
}

TEST_CASE("memory is append-only and in round order") {
    MetricSpace sp = MetricSpace::make_interval(0.0, 1.0);
    ThresholdLabel eta(sp, 0.5);
    NearestNeighborLearner learner(sp, LearnerBackend::brute);
    learner.predict_and_update({0.1}, eta);
    learner.predict_and_update({0.9}, eta);
    learner.predict_and_update({0.1}, eta);  // duplicate instance is stored again
    CHECK(learner.memory_points().size() == 3);
    CHECK(learner.memory_points()[2][0] == 0.1);
    CHECK(learner.memory_labels() == std::vector<int>{0, 1, 0});
}

TEST_CASE("mistake rate and cumulative mistakes") {
    std::vector<RoundRecord> recs(4);
    recs[0].mistake = true;
    recs[1].mistake = false;
    recs[2].mistake = true;
    recs[3].mistake = false;
    CHECK(cumulative_mistakes(recs, 1) == 1);
    CHECK(cumulative_mistakes(recs, 4) == 2);
    CHECK(mistake_rate(recs, 2) == doctest::Approx(0.5));
    CHECK(mistake_rate(recs, 4) == doctest::Approx(0.5));
    CHECK_THROWS_AS(mistake_rate(recs, 0), std::invalid_argument);
    CHECK_THROWS_AS(mistake_rate(recs, 5), std::invalid_argument);
    CHECK_THROWS_AS(cumulative_mistakes(recs, -1), std::invalid_argument);
}

TEST_CASE("the worst-case threshold stream errs every round on both backends") {
    MetricSpace sp = MetricSpace::make_interval(-1.0, 1.0);
    ThresholdLabel eta(sp, 0.0);
    WorstThresholdGenerator gen(sp, 0);
    std::vector<RoundRecord> no_recs;
    for (LearnerBackend b : {LearnerBackend::brute, LearnerBackend::cover_tree}) {
        NearestNeighborLearner learner(sp, b);
        std::vector<Point> hist;
        std::vector<RoundRecord> recs;
        for (int n = 1; n <= 12; ++n) {
            Point x = gen.next_instance(make_context(hist, no_recs, n));
            recs.push_back(learner.predict_and_update(x, eta));
            hist.push_back(x);
        }
        CHECK(mistake_rate(recs, 12) == 1.0);
        // From round 2 on, the neighbor is always the previous round.
        for (int n = 2; n <= 12; ++n) CHECK(recs[n - 1].nn_index == n - 1);
    }
}

TEST_CASE("backend equivalence on a random stream with duplicates") {
    MetricSpace sp = MetricSpace::unit_cube(MetricKind::euclidean, 2);
    CheckerboardLabel eta(sp, 2);
    Rng rng(7);
    std::vector<Point> stream;
    for (int i = 0; i < 600; ++i) {
        if (i > 10 && rng.uniform() < 0.1)
            stream.push_back(stream[rng.uniform_int(stream.size())]);  // exact repeat
        else
            stream.push_back({rng.uniform(), rng.uniform()});
    }
    BackendEquivalenceReport rep = backend_equivalence_check(sp, stream, eta);
    CHECK(rep.pass);
    CHECK(rep.rounds == 600);
    CHECK(rep.defects.empty());
}

TEST_CASE("backend equivalence on an adversarial shrinking stream") {
    MetricSpace sp = MetricSpace::make_interval(-1.0, 1.0);
    auto eta = std::make_shared<ThresholdLabel>(sp, 0.0);
    WorstGeneralGenerator gen(eta, 0);
    NearestNeighborLearner learner(sp, LearnerBackend::brute);
    std::vector<Point> hist;
    std::vector<RoundRecord> recs;
    for (int n = 1; n <= 40; ++n) {
        Point x = gen.next_instance(make_context(hist, recs, n));
        recs.push_back(learner.predict_and_update(x, *eta));
        hist.push_back(x);
    }
    BackendEquivalenceReport rep = backend_equivalence_check(sp, hist, *eta);
    CHECK(rep.pass);
    CHECK(rep.defects.empty());
}

TEST_CASE("sup metric grid stream: ties are genuine and both backends agree") {
    MetricSpace sp = MetricSpace::unit_cube(MetricKind::sup, 2);
    CheckerboardLabel eta(sp, 4);
    std::vector<Point> stream;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) stream.push_back({i / 6.0, j / 6.0});
    BackendEquivalenceReport rep = backend_equivalence_check(sp, stream, eta);
    CHECK(rep.pass);  // grid points produce many exact distance ties
    CHECK(rep.defects.empty());
}
