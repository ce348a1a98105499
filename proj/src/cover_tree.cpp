#include "nnlab/cover_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nnlab {

namespace {

// Largest integer l with 2^-l > rho (rho > 0). frexp gives
// rho = m * 2^e with m in [0.5, 1), and the answer is -e in both the
// exact power-of-two and the generic case.
int top_blocked_scale(double rho) {
    int e = 0;
    (void)std::frexp(rho, &e);
    return -e;
}

constexpr double kPruneSlack = 1.0 + 1e-12;

}  // namespace

int ceil_log_term(double c, int d, double delta) {
    if (c <= 0.0 || d <= 0 || delta <= 0.0) throw std::invalid_argument("ceil_log_term: bad inputs");
    const double v = std::log2(c / delta) / static_cast<double>(d);
    const double r = std::nearbyint(v);
    if (std::fabs(v - r) < 1e-9) return static_cast<int>(r);
    return static_cast<int>(std::ceil(v));
}

CoverTree::CoverTree(const MetricSpace& space) : space_(space), scale_(space.diameter()) {
    if (!(scale_ > 0.0)) throw std::invalid_argument("CoverTree: degenerate domain");
}

CoverTree::InsertResult CoverTree::insert(const Point& x, std::size_t ext_id) {
    InsertResult res;
    if (nodes_.empty()) {
        Node root;
        root.p = x;
        root.k = 1;
        root.rank = 0;
        root.parent = -1;
        root.ext_ids = {ext_id};
        nodes_.push_back(std::move(root));
        res.node = 0;
        res.holder = 0;
        return res;
    }

    // One pruned traversal collects everything insertion needs: exact
    // duplicates, the scales blocked by existing balls, and the visited
    // (rank, distance, id) triples from which the parent is chosen.
    // Subtrees are skipped once no descendant can block a scale, host the
    // parent, or coincide with x (all guaranteed when the node sits
    // further than 2.5 * 2^-rank away, since a subtree stays within
    // 2^(-rank+1) of its node).
    struct Visit {
        int id;
        double rho;  // original units
    };
    std::vector<Visit> visited;
    visited.reserve(64);
    std::vector<std::pair<int, int>> blocked;  // scale intervals [lo, hi]
    std::vector<int> stack{0};
    int dup_node = -1;
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const Node& nd = nodes_[id];
        const double rho = distance(space_, x, nd.p);
        if (rho == 0.0) {
            dup_node = id;
            break;
        }
        visited.push_back(Visit{id, rho});
        const double rho_scaled = rho / scale_;
        const int hi = top_blocked_scale(rho_scaled);
        if (hi >= nd.rank) blocked.emplace_back(nd.rank, hi);
        if (rho <= 2.5 * std::ldexp(scale_, -nd.rank) * kPruneSlack) {
            for (int c : nd.children) stack.push_back(c);
        }
    }
    if (dup_node >= 0) {
        auto& ids = nodes_[dup_node].ext_ids;
        ids.insert(std::lower_bound(ids.begin(), ids.end(), ext_id), ext_id);
        duplicates_.emplace_back(ext_id, dup_node);
        res.holder = dup_node;
        return res;
    }

    // L_k = smallest free scale >= 1.
    std::sort(blocked.begin(), blocked.end());
    int rank = 1;
    for (const auto& [lo, hi] : blocked) {
        if (lo > rank) break;
        if (hi >= rank) rank = hi + 1;
    }

    // Parent: lowest-index node with rank <= L_k - 1 within 2^(-L_k + 1).
    const double parent_radius = std::ldexp(scale_, -rank + 1);
    int parent = -1;
    for (const auto& v : visited) {
        if (nodes_[v.id].rank <= rank - 1 && v.rho / scale_ < std::ldexp(1.0, -rank + 1) &&
            (parent == -1 || v.id < parent))
            parent = v.id;
    }
    (void)parent_radius;
    if (parent == -1) {
        // Measure-zero pathology (e.g. scaled distance exactly 1 to every
        // coarse node): fall back to the nearest visited node.
        ++parent_fallbacks_;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& v : visited)
            if (v.rho < best || (v.rho == best && (parent == -1 || v.id < parent))) {
                best = v.rho;
                parent = v.id;
            }
    }

    Node nd;
    nd.p = x;
    nd.k = static_cast<int>(nodes_.size()) + 1;
    nd.rank = rank;
    nd.parent = parent;
    nd.ext_ids = {ext_id};
    const int new_id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(nd));
    nodes_[parent].children.push_back(new_id);
    auto& ranks = nodes_[parent].child_ranks;
    auto it = std::lower_bound(ranks.begin(), ranks.end(), rank);
    const bool fresh = (it == ranks.end() || *it != rank);
    if (fresh) ranks.insert(it, rank);

    res.node = new_id;
    res.holder = new_id;
    res.parent = parent;
    res.new_generation_rank = fresh;
    return res;
}

CoverTree::NnResult CoverTree::nearest(const Point& x) const {
    if (nodes_.empty()) throw std::invalid_argument("CoverTree::nearest: empty tree");
    NnResult best;
    best.dist = std::numeric_limits<double>::infinity();
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const Node& nd = nodes_[id];
        const double d = distance(space_, x, nd.p);
        const std::size_t ext = nd.ext_ids.front();
        if (d < best.dist || (d == best.dist && ext < best.ext_id)) {
            best.dist = d;
            best.node = id;
            best.ext_id = ext;
        }
        // Subtree of nd stays within 2^(-rank+1) (scaled) of nd; prune
        // only on a strict gap so equal-distance candidates are visited.
        if (d - std::ldexp(scale_, -nd.rank + 1) * kPruneSlack > best.dist) continue;
        for (auto it = nd.children.rbegin(); it != nd.children.rend(); ++it) stack.push_back(*it);
    }
    return best;
}

CoverTree::NeighborBall CoverTree::neighbor_ball(const Point& x) const {
    const NnResult nn = nearest(x);
    if (nn.dist == 0.0)
        throw std::invalid_argument("CoverTree::neighbor_ball: query coincides with a node");
    const double d_scaled = nn.dist / scale_;
    int level = std::max(0, top_blocked_scale(d_scaled));

    NeighborBall nb;
    nb.level = level;
    nb.radius_scaled = std::ldexp(1.0, -level);
    nb.radius_original = std::ldexp(scale_, -level);
    nb.dist_scaled = d_scaled;
    if (nodes_[nn.node].rank <= level) {
        nb.node = nn.node;
        return nb;
    }
    // The nearest node is itself covered at scale `level` by some
    // coarser-rank node; pick the lowest-index one. Ranks grow along root
    // paths, so the rank <= level fringe is an upward-closed subtree.
    const Point& target = nodes_[nn.node].p;
    int pick = -1;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const Node& nd = nodes_[id];
        if (nd.rank > level) continue;
        const double rho_scaled = distance(space_, target, nd.p) / scale_;
        if (rho_scaled < nb.radius_scaled && (pick == -1 || id < pick)) pick = id;
        for (int c : nd.children) stack.push_back(c);
    }
    if (pick == -1) pick = 0;  // top-scale clamp: the root ball
    nb.node = pick;
    return nb;
}

int CoverTree::generation_count(int node) const {
    return static_cast<int>(nodes_.at(node).child_ranks.size());
}

int CoverTree::tail_rank(int node, const TailConfig& cfg) const {
    const Node& nd = nodes_.at(node);
    return nd.rank + 1 + ceil_log_term(cfg.c, cfg.d, cfg.delta) +
           static_cast<int>(nd.child_ranks.size());
}

std::vector<Ball> CoverTree::tail_balls(const TailConfig& cfg) const {
    std::vector<Ball> out;
    out.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const int t = tail_rank(static_cast<int>(i), cfg);
        out.push_back(Ball{nodes_[i].p, std::ldexp(scale_, -t)});
    }
    return out;
}

MassEstimate CoverTree::tail_set_mass(const TailConfig& cfg, const ReferenceMeasure& measure,
                                      std::int64_t mc_samples, std::uint64_t seed) const {
    if (nodes_.empty()) return MassEstimate{0.0, 0.0, 0, true};
    return measure.mass_of_ball_union(tail_balls(cfg), mc_samples, seed);
}

std::string CoverTree::dump() const {
    std::string out;
    char buf[64];
    for (const auto& nd : nodes_) {
        out += std::to_string(nd.k);
        out += ' ';
        for (std::size_t i = 0; i < nd.p.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", nd.p[i]);
            if (i) out += ',';
            out += buf;
        }
        out += ' ';
        out += std::to_string(nd.rank);
        out += ' ';
        out += std::to_string(nd.parent + 1);  // 1-based, 0 = none
        out += ' ';
        if (nd.child_ranks.empty()) {
            out += '-';
        } else {
            for (std::size_t i = 0; i < nd.child_ranks.size(); ++i) {
                if (i) out += ',';
                out += std::to_string(nd.child_ranks[i]);
            }
        }
        out += '\n';
    }
    return out;
}

CoverTree CoverTree::parse(const MetricSpace& space, const std::string& text) {
    CoverTree tree(space);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Node nd;
        std::string coords, gens;
        int parent1 = 0;
        if (!(ls >> nd.k >> coords >> nd.rank >> parent1 >> gens))
            throw std::invalid_argument("CoverTree::parse: malformed line: " + line);
        nd.parent = parent1 - 1;
        std::istringstream cs(coords);
        std::string tok;
        while (std::getline(cs, tok, ',')) nd.p.push_back(std::strtod(tok.c_str(), nullptr));
        if (static_cast<int>(nd.p.size()) != space.dim)
            throw std::invalid_argument("CoverTree::parse: coordinate dimension mismatch");
        if (gens != "-") {
            std::istringstream gs(gens);
            while (std::getline(gs, tok, ',')) nd.child_ranks.push_back(std::stoi(tok));
        }
        nd.ext_ids = {static_cast<std::size_t>(nd.k - 1)};
        if (nd.k != static_cast<int>(tree.nodes_.size()) + 1)
            throw std::invalid_argument("CoverTree::parse: nodes out of order");
        tree.nodes_.push_back(std::move(nd));
    }
    for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
        const int p = tree.nodes_[i].parent;
        if (p >= 0) {
            if (p >= static_cast<int>(i))
                throw std::invalid_argument("CoverTree::parse: parent must precede child");
            tree.nodes_[p].children.push_back(static_cast<int>(i));
        } else if (i != 0) {
            throw std::invalid_argument("CoverTree::parse: only the root may lack a parent");
        }
    }
    return tree;
}

DecompositionCheck decomposition_check(const CoverTree& tree, const Point& x,
                                       double history_dist) {
    DecompositionCheck out;
    if (tree.empty()) return out;
    const MetricSpace& space = tree.space();
    const CoverTree::NnResult n = tree.nearest(x);
    if (n.dist > history_dist) return out;  // nearest history point is not a tree node
    if (n.dist == 0.0) return out;          // query equals a node: neighbor ball undefined
    out.applicable = true;

    const auto nb = tree.neighbor_ball(x);
    out.node = nb.node;
    out.level = nb.level;
    out.separation_scaled = history_dist / tree.scale();
    out.center_dist_scaled = distance(space, x, tree.nodes()[nb.node].p) / tree.scale();
    out.ok = out.separation_scaled >= std::ldexp(1.0, -nb.level - 1) &&
             out.center_dist_scaled < std::ldexp(1.0, -nb.level + 1);
    return out;
}

DecompositionCheck decomposition_check(const CoverTree& tree, const Point& x,
                                       const std::vector<Point>& history) {
    if (history.empty()) return DecompositionCheck{};
    return decomposition_check(tree, x, set_distance(tree.space(), x, history).dist);
}

std::size_t SeparatedEventLog::total() const {
    std::size_t n = 0;
    for (const auto& [k, v] : charges_) n += v.size();
    return n;
}

PackingAuditReport packing_bound_audit(const SeparatedEventLog& log, const CoverTree& tree) {
    PackingAuditReport rep;
    const MetricSpace& space = tree.space();
    const double scale = tree.scale();
    for (const auto& [key, charges] : log.charges()) {
        ++rep.n_keys;
        rep.n_charges += static_cast<int>(charges.size());
        rep.max_count = std::max(rep.max_count, static_cast<int>(charges.size()));
        const auto& [node, level] = key;
        const Point& center = tree.nodes().at(node).p;
        const double big_radius = std::ldexp(1.0, -level + 1);  // scaled, doubled ball
        const double sep = std::ldexp(1.0, -level - 1);         // scaled, r/2

        for (std::size_t i = 0; i < charges.size(); ++i) {
            const double dc = distance(space, charges[i].x, center) / scale;
            if (!(dc < big_radius)) {
                rep.pass = false;
                rep.violations.push_back("round " + std::to_string(charges[i].round) +
                                         " outside doubled ball of key (" + std::to_string(node) +
                                         "," + std::to_string(level) + ")");
            }
            for (std::size_t j = i + 1; j < charges.size(); ++j) {
                const double dij = distance(space, charges[i].x, charges[j].x) / scale;
                if (!(dij >= sep)) {
                    rep.pass = false;
                    rep.violations.push_back(
                        "rounds " + std::to_string(charges[i].round) + "," +
                        std::to_string(charges[j].round) + " closer than r/2 for key (" +
                        std::to_string(node) + "," + std::to_string(level) + ")");
                }
            }
        }
        if (space.kind != MetricKind::euclidean || space.dim == 1) {
            // The doubled ball clipped to the domain is a box; compare the
            // charge count against the exact packing bound of that box.
            const Ball big{center, big_radius * scale};
            if (auto box = ball_as_box(space, big)) {
                std::vector<double> sides(box->dim());
                for (std::size_t i = 0; i < sides.size(); ++i)
                    sides[i] = (box->hi[i] - box->lo[i]) / scale;
                const int bound = max_packing_open_box(sides, sep);
                if (static_cast<int>(charges.size()) > bound) {
                    rep.pass = false;
                    rep.violations.push_back("key (" + std::to_string(node) + "," +
                                             std::to_string(level) + ") holds " +
                                             std::to_string(charges.size()) +
                                             " charges, packing bound " + std::to_string(bound));
                }
            }
        }
    }
    return rep;
}

}  // namespace nnlab
