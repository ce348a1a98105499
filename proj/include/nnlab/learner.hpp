#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nnlab/cover_tree.hpp"
#include "nnlab/labels.hpp"
#include "nnlab/metric.hpp"

namespace nnlab {

// One round of the online rule. Rounds are 1-based; `nn_index` is the
// 1-based round whose instance served as the neighbor. Round 1 has no
// neighbor: the learner abstains and the abstention is scored as a
// mistake.
struct RoundRecord {
    int n = 0;
    Point instance;
    std::optional<int> nn_index;
    std::optional<double> nn_distance;
    std::optional<int> predicted;  // nullopt = abstain
    int truth = 0;
    bool mistake = false;
};

enum class LearnerBackend { brute, cover_tree };

LearnerBackend learner_backend_from_string(const std::string& s);
std::string to_string(LearnerBackend b);

// Online 1-nearest-neighbor rule: predict with the label of the nearest
// stored instance (lowest round on ties), then append (x, truth) to
// memory. Memory is append-only. The cover-tree backend answers the same
// queries exactly (identical distances; identical indices whenever the
// argmin is unique, and in fact the same lowest-index tie choice).
class NearestNeighborLearner {
public:
    NearestNeighborLearner(const MetricSpace& space, LearnerBackend backend);

    RoundRecord predict_and_update(const Point& x, const LabelFunction& eta);

    int rounds() const { return static_cast<int>(points_.size()); }
    const std::vector<Point>& memory_points() const { return points_; }
    const std::vector<int>& memory_labels() const { return labels_; }
    LearnerBackend backend() const { return backend_; }

private:
    MetricSpace space_;
    LearnerBackend backend_;
    std::vector<Point> points_;
    std::vector<int> labels_;
    std::unique_ptr<CoverTree> tree_;  // cover_tree backend only
};

// Fraction of mistaken rounds among the first N.
double mistake_rate(const std::vector<RoundRecord>& records, int n);
// Cumulative mistakes among the first N rounds.
int cumulative_mistakes(const std::vector<RoundRecord>& records, int n);

// Replays one instance stream through both backends and compares rounds.
// Distances must agree exactly; differing neighbor indices are reported
// as ties (and verified to be genuine distance ties), not failures.
struct BackendEquivalenceReport {
    bool pass = true;
    int rounds = 0;
    int index_ties = 0;
    std::vector<std::string> defects;
};

BackendEquivalenceReport backend_equivalence_check(const MetricSpace& space,
                                                   const std::vector<Point>& stream,
                                                   const LabelFunction& eta);

}  // namespace nnlab
