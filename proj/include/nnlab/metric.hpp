#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace nnlab {

// A point is a coordinate vector of fixed length (the space dimension).
using Point = std::vector<double>;

enum class MetricKind {
    sup,        // ell-infinity on a box
    euclidean,  // ell-2 on a box
    interval,   // |x - y| on a 1-D interval
};

std::string to_string(MetricKind k);
MetricKind metric_kind_from_string(const std::string& s);

// An axis-aligned closed box, used for domains, measure components and
// attack regions.
struct Box {
    std::vector<double> lo, hi;

    std::size_t dim() const { return lo.size(); }
    bool contains(const Point& x) const;
    double volume() const;
    // Volume of the intersection with `other`.
    double overlap_volume(const Box& other) const;
};

// Description of the instance space: a metric of one of the supported
// kinds on an axis-aligned box, plus the doubling parameters used by the
// tail-rank machinery. Conventions:
//   - `doubling_d` / `doubling_c` refer to the rescaled space of unit
//     diameter: nu(B(x, r)) <= c * r^d for the normalized reference
//     measure and radii measured in units of the domain diameter.
//   - Defaults for a box domain: d = dim, c = 2^dim.
struct MetricSpace {
    MetricKind kind = MetricKind::interval;
    int dim = 1;
    Box domain;
    int doubling_d = 1;
    double doubling_c = 2.0;

    double diameter() const;
    bool in_domain(const Point& x) const { return domain.contains(x); }

    static MetricSpace make_interval(double lo, double hi);
    static MetricSpace make_box(MetricKind kind, std::vector<double> lo, std::vector<double> hi);
    // Unit cube [0,1]^dim with the given metric.
    static MetricSpace unit_cube(MetricKind kind, int dim);
};

// Balls are open: contains(x) iff distance(center, x) < radius, strictly.
struct Ball {
    Point center;
    double radius = 0.0;

    bool contains(const MetricSpace& space, const Point& x) const;
};

// Metric evaluation. Throws std::invalid_argument on dimension mismatch.
double distance(const MetricSpace& space, const Point& x, const Point& y);

// Distance from x to a finite nonempty set, with the index of the
// nearest element (lowest index on ties). Throws on an empty set.
struct Nearest {
    double dist = 0.0;
    std::size_t index = 0;
};
Nearest set_distance(const MetricSpace& space, const Point& x, const std::vector<Point>& zs);

// Max pairwise distance of a finite nonempty set (0 for singletons).
double diameter(const MetricSpace& space, const std::vector<Point>& zs);

// Counting results carry an exactness flag: `exact` means the value was
// obtained by exhaustive search, otherwise it is a one-sided greedy
// bound (lower for packings, upper for coverings).
struct CountBound {
    int value = 0;
    bool exact = true;
};

// Max cardinality of an r-separated subset (pairwise distances >= r).
// Exhaustive (max-clique) search up to `exact_cap` points, greedy lower
// bound above that.
inline constexpr std::size_t kExactSearchCap = 24;
CountBound packing_number(const MetricSpace& space, const std::vector<Point>& points, double r,
                          std::size_t exact_cap = kExactSearchCap);

// Min number of radius-r balls centered at elements of `points` that
// cover `points`. Exhaustive up to `exact_cap`, greedy upper bound above.
CountBound covering_number(const MetricSpace& space, const std::vector<Point>& points, double r,
                           std::size_t exact_cap = kExactSearchCap);

// Membership of x in the open r-expansion of a finite set A:
// true iff set_distance(x, A) < r. Throws on empty A.
bool r_expansion_membership(const MetricSpace& space, const std::vector<Point>& as, double r,
                            const Point& x);

// Exact max cardinality of an r-separated subset of an open box (used by
// the packing-bound audit for sup-norm/interval spaces, where open balls
// clipped to the domain are boxes).
int max_packing_open_box(const std::vector<double>& sides, double r);

// Open ball clipped to the domain, as a box. Only valid for sup/interval
// metrics where balls are boxes; returns nullopt for euclidean.
std::optional<Box> ball_as_box(const MetricSpace& space, const Ball& b);

}  // namespace nnlab
