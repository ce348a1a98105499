#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnlab/measure.hpp"
#include "nnlab/metric.hpp"

namespace nnlab {

// Parameters of the tail-rank formula: mass tolerance delta and the
// upper-doubling constants (c, d) of the rescaled space.
struct TailConfig {
    double delta = 0.25;
    double c = 2.0;
    int d = 1;
};

// ceil((1/d) * lg(c / delta)), with a small nudge so exact powers of two
// do not round up.
int ceil_log_term(double c, int d, double delta);

// Sequentially constructed cover tree over a metric space rescaled to
// unit diameter (points are stored in original coordinates; scaled
// distance = distance / diameter). Insertion follows the online rule:
//
//   - the first point becomes the root at rank L_1 = 0;
//   - point k gets rank L_k = the smallest scale l >= 1 such that no
//     existing node with rank <= l lies within 2^-l (scaled) of it;
//   - its parent is the lowest-index node within 2^(-L_k + 1) whose rank
//     is at most L_k - 1.
//
// Each node tracks the set of distinct ranks among its children (its
// "generations"); the tail rank of node k is
//   T_k = L_k + 1 + ceil((1/d) lg(c/delta)) + G_k
// with G_k the current generation count.
class CoverTree {
public:
    struct Node {
        Point p;
        int k = 0;                          // 1-based insertion index
        int rank = 0;                       // L_k
        int parent = -1;                    // node id, -1 for the root
        std::vector<int> child_ranks;       // sorted distinct ranks among children
        std::vector<int> children;          // node ids
        std::vector<std::size_t> ext_ids;   // attached external ids (sorted)
    };

    struct InsertResult {
        std::optional<int> node;   // nullopt: duplicate point, id attached to holder
        int holder = -1;           // node carrying the point (new or existing)
        int parent = -1;
        bool new_generation_rank = false;  // parent's generation set grew
    };

    explicit CoverTree(const MetricSpace& space);

    InsertResult insert(const Point& x, std::size_t ext_id);

    bool empty() const { return nodes_.empty(); }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const MetricSpace& space() const { return space_; }
    double scale() const { return scale_; }  // original units per scaled unit

    // Number of insert calls that hit an existing point (skipped with the
    // external id attached to the holder node).
    const std::vector<std::pair<std::size_t, int>>& duplicates_skipped() const {
        return duplicates_;
    }

    // Exact nearest node. Distances are evaluated with the same
    // expression as a brute-force scan, so results (value and tie order
    // by lowest external id) match it bit for bit.
    struct NnResult {
        double dist = 0.0;           // original units
        int node = -1;
        std::size_t ext_id = 0;      // lowest external id at that node
    };
    NnResult nearest(const Point& x) const;

    // The dyadic neighbor ball of a query x (not equal to any node):
    // with D = scaled distance to the nodes and l the unique scale with
    // 2^(-l-1) <= D < 2^-l (clamped at l >= 0 at the top), returns a ball
    // B(a, 2^-l) present in the tree with scaled rho(x, a) < 2^(-l+1).
    // The center is the nearest node when its rank allows, otherwise the
    // lowest-index node at rank <= l covering the nearest node.
    struct NeighborBall {
        int node = -1;
        int level = 0;                // l
        double radius_scaled = 0.0;   // 2^-l
        double radius_original = 0.0;
        double dist_scaled = 0.0;     // scaled distance from x to the nodes
    };
    NeighborBall neighbor_ball(const Point& x) const;

    // Tail machinery.
    int generation_count(int node) const;
    int tail_rank(int node, const TailConfig& cfg) const;
    std::vector<Ball> tail_balls(const TailConfig& cfg) const;  // original units
    MassEstimate tail_set_mass(const TailConfig& cfg, const ReferenceMeasure& measure,
                               std::int64_t mc_samples = 200000,
                               std::uint64_t seed = 0x7A11ull) const;

    // Line-based text serialization: one node per line,
    //   k coord0[,coord1,...] rank parent gens
    // with parent as a 1-based index (0 = none) and gens a comma list of
    // child ranks ("-" when empty). Coordinates round-trip bit-exactly.
    std::string dump() const;
    static CoverTree parse(const MetricSpace& space, const std::string& text);

private:
    friend struct CoverTreeTestPeek;
    MetricSpace space_;
    double scale_ = 1.0;
    std::vector<Node> nodes_;
    std::vector<std::pair<std::size_t, int>> duplicates_;
    int parent_fallbacks_ = 0;
};

// Decomposition probe: for a query x whose nearest history point is a
// tree node, the neighbor ball B = B(a, r) must satisfy both
//   scaled rho(x, history) >= r/2   and   scaled rho(x, a) < 2r.
struct DecompositionCheck {
    bool applicable = false;
    bool ok = false;
    int node = -1;
    int level = 0;
    double separation_scaled = 0.0;
    double center_dist_scaled = 0.0;
};

DecompositionCheck decomposition_check(const CoverTree& tree, const Point& x,
                                       const std::vector<Point>& history);
// Same, with rho(x, history) already known (e.g. the learner's
// nn_distance), avoiding the linear scan.
DecompositionCheck decomposition_check(const CoverTree& tree, const Point& x,
                                       double history_dist);

// Log of r-separated hit events, keyed by the charged ball and scale:
// key (node, l) carries the rounds whose instance was 2^(-l-1)-separated
// from history and fell in the doubled ball B(node, 2^(-l+1)).
class SeparatedEventLog {
public:
    struct Charge {
        int round = 0;
        Point x;
    };
    using Key = std::pair<int, int>;  // (node id, level l)

    void charge(int node, int level, int round, const Point& x) {
        charges_[{node, level}].push_back(Charge{round, x});
    }
    const std::map<Key, std::vector<Charge>>& charges() const { return charges_; }
    std::size_t total() const;

private:
    std::map<Key, std::vector<Charge>> charges_;
};

// Packing audit: for every charged key, the instances must lie in the
// doubled ball, be pairwise 2^(-l-1)-separated, and (for sup/interval
// metrics, where the doubled ball clipped to the domain is a box) number
// at most the exact packing bound of that box.
struct PackingAuditReport {
    bool pass = true;
    int n_keys = 0;
    int n_charges = 0;
    int max_count = 0;
    std::vector<std::string> violations;
};

PackingAuditReport packing_bound_audit(const SeparatedEventLog& log, const CoverTree& tree);

}  // namespace nnlab
