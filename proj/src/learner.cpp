#include "nnlab/learner.hpp"

#include <cmath>
#include <stdexcept>

namespace nnlab {

LearnerBackend learner_backend_from_string(const std::string& s) {
    if (s == "brute") return LearnerBackend::brute;
    if (s == "cover_tree") return LearnerBackend::cover_tree;
    throw std::invalid_argument("unknown learner backend: " + s);
}

std::string to_string(LearnerBackend b) {
    return b == LearnerBackend::brute ? "brute" : "cover_tree";
}

NearestNeighborLearner::NearestNeighborLearner(const MetricSpace& space, LearnerBackend backend)
    : space_(space), backend_(backend) {
    if (backend_ == LearnerBackend::cover_tree) tree_ = std::make_unique<CoverTree>(space_);
}

RoundRecord NearestNeighborLearner::predict_and_update(const Point& x, const LabelFunction& eta) {
    RoundRecord rec;
    rec.n = rounds() + 1;
    rec.instance = x;
    rec.truth = eta.label(x);

    if (!points_.empty()) {
        if (backend_ == LearnerBackend::brute) {
            const Nearest nn = set_distance(space_, x, points_);
            rec.nn_index = static_cast<int>(nn.index) + 1;
            rec.nn_distance = nn.dist;
            rec.predicted = labels_[nn.index];
        } else {
            const CoverTree::NnResult nn = tree_->nearest(x);
            rec.nn_index = static_cast<int>(nn.ext_id) + 1;
            rec.nn_distance = nn.dist;
            rec.predicted = labels_[nn.ext_id];
        }
        rec.mistake = *rec.predicted != rec.truth;
    } else {
        rec.mistake = true;  // round 1: abstention scores as a mistake
    }

    points_.push_back(x);
    labels_.push_back(rec.truth);
    if (tree_) tree_->insert(x, points_.size() - 1);
    return rec;
}

double mistake_rate(const std::vector<RoundRecord>& records, int n) {
    if (n <= 0 || n > static_cast<int>(records.size()))
        throw std::invalid_argument("mistake_rate: bad horizon");
    return static_cast<double>(cumulative_mistakes(records, n)) / static_cast<double>(n);
}

int cumulative_mistakes(const std::vector<RoundRecord>& records, int n) {
    if (n <= 0 || n > static_cast<int>(records.size()))
        throw std::invalid_argument("cumulative_mistakes: bad horizon");
    int m = 0;
    for (int i = 0; i < n; ++i) m += records[i].mistake ? 1 : 0;
    return m;
}

BackendEquivalenceReport backend_equivalence_check(const MetricSpace& space,
                                                   const std::vector<Point>& stream,
                                                   const LabelFunction& eta) {
    BackendEquivalenceReport rep;
    rep.rounds = static_cast<int>(stream.size());
    NearestNeighborLearner brute(space, LearnerBackend::brute);
    NearestNeighborLearner fast(space, LearnerBackend::cover_tree);
    std::vector<Point> seen;
    seen.reserve(stream.size());
    for (const Point& x : stream) {
        const RoundRecord a = brute.predict_and_update(x, eta);
        const RoundRecord b = fast.predict_and_update(x, eta);
        if (a.nn_distance.has_value() != b.nn_distance.has_value() ||
            (a.nn_distance && *a.nn_distance != *b.nn_distance)) {
            rep.pass = false;
            rep.defects.push_back("round " + std::to_string(a.n) + ": distances differ");
        } else if (a.nn_index != b.nn_index) {
            // Allowed only for genuine distance ties.
            bool tie = false;
            if (a.nn_index && b.nn_index) {
                const double da = distance(space, x, seen[*a.nn_index - 1]);
                const double db = distance(space, x, seen[*b.nn_index - 1]);
                tie = (da == db);
            }
            if (tie) {
                ++rep.index_ties;
            } else {
                rep.pass = false;
                rep.defects.push_back("round " + std::to_string(a.n) +
                                      ": neighbor indices differ without a distance tie");
            }
        }
        seen.push_back(x);
    }
    return rep;
}

}  // namespace nnlab
