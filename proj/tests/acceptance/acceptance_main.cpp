// Acceptance harness: twelve end-to-end checks of the laboratory at desk
// scale, one [PASS]/[FAIL] line each. Exit code 0 only when all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "nnlab/audits.hpp"
#include "nnlab/config.hpp"
#include "nnlab/cover_tree.hpp"
#include "nnlab/experiment.hpp"
#include "nnlab/geometry.hpp"
#include "nnlab/labels.hpp"
#include "nnlab/learner.hpp"
#include "nnlab/measure.hpp"
#include "nnlab/metric.hpp"
#include "nnlab/process.hpp"
#include "nnlab/rng.hpp"
#include "nnlab/trace.hpp"

using namespace nnlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

ExperimentConfig cfg_of(const std::string& body) {
    KvConfig kv = KvConfig::parse_string("config_version = 1\n" + body);
    return config_from_kv(kv);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// 1. The threshold adversary forces a mistake every round: rate exactly 1
//    over 100 rounds, in under a second.
Outcome c01_threshold_adversary() {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = cfg_of(
        "space.lo = -0.5\nspace.hi = 0.5\n"
        "label.family = threshold\nlabel.threshold = 0\n"
        "process.class = worst_threshold\n"
        "horizon = 100\naudits = none\n");
    TrialResult res = run_trial(cfg, 0);
    double secs = seconds_since(t0);
    bool every_round = true;
    for (const TraceRow& row : res.rows) every_round = every_round && row.rec.mistake;
    Outcome o;
    o.pass = res.final_rate == 1.0 && every_round && secs < 1.0;
    o.detail = "rate " + fmt_double(res.final_rate) + " over 100 rounds, " +
               fmt_double(secs) + "s (need exactly 1 in < 1s)";
    return o;
}

// 2. The general adversary against a halfspace in the euclidean square
//    keeps the rate at or above 1/2 - 2/N for N = 1000, in under 5s.
Outcome c02_general_adversary() {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = cfg_of(
        "space.kind = euclidean\nspace.dim = 2\nspace.lo = -1\nspace.hi = 1\n"
        "label.family = halfspace\nlabel.w = 1, -1\nlabel.b = 0\n"
        "process.class = worst_general\n"
        "horizon = 1000\nseed = 2\naudits = none\n");
    TrialResult res = run_trial(cfg, 0);
    double secs = seconds_since(t0);
    double bound = 0.5 - 2.0 / 1000.0;
    Outcome o;
    o.pass = res.final_rate >= bound && secs < 5.0;
    o.detail = "rate " + fmt_double(res.final_rate) + " >= " + fmt_double(bound) + ", " +
               fmt_double(secs) + "s";
    return o;
}

// 3. Across 50 runs (four label families, two process classes), every
//    certified mutually-labeling ball holds at most one mistaken round.
Outcome c03_mutual_labeling() {
    const char* families[4] = {
        "label.family = threshold\nlabel.threshold = 0.35\n",
        "label.family = halfspace\nlabel.w = 1\nlabel.b = 0.6\n",
        "label.family = union_of_balls\nlabel.balls = 0.3 0.15; 0.75 0.1\n",
        "label.family = checkerboard\nlabel.cells = 4\n"};
    int runs = 0, bad = 0;
    for (int i = 0; i < 50; ++i) {
        std::string body = families[i % 4];
        body += i % 2 == 0 ? "process.class = iid\n"
                           : "process.class = smoothed\nprocess.sigma = 0.2\n";
        body += "horizon = 300\naudits = mutual_labeling\nseed = " + std::to_string(100 + i) + "\n";
        ExperimentConfig cfg = cfg_of(body);
        std::vector<TrialResult> trials;
        trials.push_back(run_trial(cfg, 0));
        std::vector<AuditReport> reps = audit_suite(cfg, trials, false);
        ++runs;
        if (reps[0].skipped || !reps[0].pass) ++bad;
    }
    Outcome o;
    o.pass = bad == 0 && runs == 50;
    o.detail = std::to_string(runs) + " runs, " + std::to_string(bad) + " violations (need 0)";
    return o;
}

// 4. Separated-event charges pack: inside the doubled ball, pairwise
//    separated, and within the exact packing count of the clipped box.
Outcome c04_hit_packing() {
    ExperimentConfig cfg = cfg_of(
        "label.family = threshold\nlabel.threshold = 0.5\n"
        "process.class = iid\nhorizon = 2000\ntrials = 5\nseed = 4\n"
        "indicator.kind = region\nindicator.mass = 0.3\n"
        "audits = hit_packing, decomposition\n");
    ExperimentResult result = run_experiment(cfg);
    std::size_t charges = 0;
    for (const TrialResult& t : result.trials) charges += t.sep_log.total();
    bool ok = charges > 0;
    double violations = 0.0;
    for (const AuditReport& r : result.reports) {
        ok = ok && r.pass && !r.skipped;
        violations += r.observed;
    }
    Outcome o;
    o.pass = ok && violations == 0.0;
    o.detail = std::to_string(charges) + " charges over 5 trials, " +
               fmt_double(violations) + " violations (need 0)";
    return o;
}

// 5. Tail-set mass stays below delta: exactly, after every prefix of 100
//    1-d runs; by Monte Carlo with 3-sigma slack on 20 planar runs.
Outcome c05_delta_tail() {
    const double deltas[3] = {0.25, 0.1, 0.01};
    long checked = 0, bad = 0;

    MetricSpace line = MetricSpace::make_interval(0.0, 1.0);
    ReferenceMeasure nu1 = ReferenceMeasure::lebesgue(line);
    for (int run = 0; run < 100; ++run) {
        Rng rng(derive_seed(505, run, 0));
        CoverTree tree(line);
        for (int i = 1; i <= 500; ++i) {
            tree.insert({rng.uniform()}, static_cast<std::size_t>(i));
            for (double delta : deltas) {
                MassEstimate m = tree.tail_set_mass({delta, 2.0, 1}, nu1);
                ++checked;
                if (!m.exact || !(m.value < delta)) ++bad;
            }
        }
    }

    MetricSpace sq = MetricSpace::unit_cube(MetricKind::sup, 2);
    ReferenceMeasure nu2 = ReferenceMeasure::lebesgue(sq);
    for (int run = 0; run < 20; ++run) {
        Rng rng(derive_seed(606, run, 0));
        CoverTree tree(sq);
        for (int i = 1; i <= 500; ++i)
            tree.insert({rng.uniform(), rng.uniform()}, static_cast<std::size_t>(i));
        for (double delta : deltas) {
            MassEstimate m = tree.tail_set_mass({delta, 4.0, 2}, nu2, 40000,
                                                derive_seed(707, run, 0));
            ++checked;
            if (!(m.value < delta + 3.0 * m.stderr_)) ++bad;
        }
    }

    Outcome o;
    o.pass = bad == 0;
    o.detail = std::to_string(checked) + " tail masses checked, " + std::to_string(bad) +
               " over budget (need 0)";
    return o;
}

// 6. Neighbor balls double-cover 100000 queries against a 2000-node tree:
//    level bracket, rank bound, center within twice the radius.
Outcome c06_neighbor_balls() {
    Rng rng(66);
    MetricSpace sq = MetricSpace::unit_cube(MetricKind::sup, 2);
    CoverTree tree(sq);
    for (int i = 1; i <= 2000; ++i)
        tree.insert({rng.uniform(), rng.uniform()}, static_cast<std::size_t>(i));

    long done = 0, bad = 0;
    for (long q = 0; q < 100000; ++q) {
        Point x;
        if (q % 5 == 4) {
            const Point& p = tree.nodes()[rng.uniform_int(tree.size())].p;
            x = {std::clamp(p[0] + (rng.uniform() - 0.5) * 0x1p-10, 0.0, 1.0),
                 std::clamp(p[1] + (rng.uniform() - 0.5) * 0x1p-10, 0.0, 1.0)};
        } else {
            x = {rng.uniform(), rng.uniform()};
        }
        auto nn = tree.nearest(x);
        if (nn.dist == 0.0) continue;
        auto nb = tree.neighbor_ball(x);
        double d_scaled = nn.dist / tree.scale();
        bool ok = nb.dist_scaled == d_scaled;
        if (nb.level >= 1)
            ok = ok && d_scaled >= std::ldexp(1.0, -nb.level - 1) &&
                 d_scaled < std::ldexp(1.0, -nb.level);
        else
            ok = ok && d_scaled >= 0.5;
        ok = ok && tree.nodes()[static_cast<std::size_t>(nb.node)].rank <= nb.level;
        double dc = distance(sq, x, tree.nodes()[static_cast<std::size_t>(nb.node)].p) /
                    tree.scale();
        ok = ok && dc < std::ldexp(1.0, -nb.level + 1);
        ok = ok && nb.radius_original == nb.radius_scaled * tree.scale();
        ++done;
        if (!ok) ++bad;
    }
    Outcome o;
    o.pass = bad == 0 && done >= 99000;
    o.detail = std::to_string(done) + " queries, " + std::to_string(bad) +
               " cover defects (need 0)";
    return o;
}

// 7. Cover-tree and brute-force backends agree on 100000 mixed rounds
//    (fresh draws, exact repeats, tie-heavy grid points).
Outcome c07_backend_equivalence() {
    Rng rng(77);
    MetricSpace sq = MetricSpace::unit_cube(MetricKind::sup, 2);
    CheckerboardLabel label(sq, 4);
    std::vector<Point> stream;
    stream.reserve(100000);
    for (long n = 0; n < 100000; ++n) {
        double p = rng.uniform();
        if (p < 0.15 && !stream.empty()) {
            stream.push_back(stream[rng.uniform_int(stream.size())]);
        } else if (p < 0.30) {
            stream.push_back({static_cast<double>(rng.uniform_int(9)) / 8.0,
                              static_cast<double>(rng.uniform_int(9)) / 8.0});
        } else {
            stream.push_back({rng.uniform(), rng.uniform()});
        }
    }
    BackendEquivalenceReport r = backend_equivalence_check(sq, stream, label);
    Outcome o;
    o.pass = r.pass && r.defects.empty() && r.rounds == 100000;
    o.detail = std::to_string(r.rounds) + " rounds, " + std::to_string(r.defects.size()) +
               " defects (need 0), " + std::to_string(r.index_ties) + " verified index ties";
    return o;
}

// 8. Against the smoothed adversary the rule is consistent in practice:
//    median rates fall strictly across N = 100, 1000, 10000 and end
//    below 0.05, within 2 minutes for 10 trials.
Outcome c08_smoothed_consistency() {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = cfg_of(
        "space.lo = -1\nspace.hi = 1\n"
        "label.family = threshold\nlabel.threshold = 0\n"
        "process.class = smoothed\nprocess.sigma = 0.1\n"
        "horizon = 10000\ntrials = 10\nseed = 8\naudits = none\n");
    ExperimentResult result = run_experiment(cfg);
    double secs = seconds_since(t0);
    std::vector<double> med;
    for (std::size_t cp = 0; cp < 3; ++cp) {
        std::vector<double> rates;
        for (const TrialResult& t : result.trials) {
            auto [n, cum] = t.checkpoint_mistakes[cp];
            rates.push_back(static_cast<double>(cum) / static_cast<double>(n));
        }
        med.push_back(median(rates));
    }
    Outcome o;
    o.pass = med[0] > med[1] && med[1] > med[2] && med[2] < 0.05 && secs < 120.0;
    o.detail = "median rates " + fmt_double(med[0]) + " > " + fmt_double(med[1]) + " > " +
               fmt_double(med[2]) + " (final < 0.05), " + fmt_double(secs) + "s";
    return o;
}

// 9. The rate curve fitted from boundary geometry dominates the observed
//    mistake curves at every checkpoint for at least 95% of 20 trials.
Outcome c09_rate_bound() {
    ExperimentConfig cfg = cfg_of(
        "label.family = threshold\nlabel.threshold = 0.5\n"
        "process.class = iid\nhorizon = 2000\ntrials = 20\nseed = 9\n"
        "audits = rate_bound\n");
    ExperimentResult result = run_experiment(cfg);
    const AuditReport& rep = result.reports[0];
    Outcome o;
    o.pass = rep.pass && !rep.skipped;
    o.detail = "worst mistakes/bound ratio " + fmt_double(rep.observed) + " across 20 trials";
    return o;
}

// 10. Long-term influence of a small region: with c1 = 2^(2d)(3 + lg(c)/d)
//     and c2 = 2^(2d)/d, the indicated-NN hit rate stays below
//     gamma*(c1 + c2 lg(1/delta)) + eps(delta) + 5/sqrt(N) on all trials.
Outcome c10_influence_bound() {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = cfg_of(
        "label.family = threshold\nlabel.threshold = 0.5\n"
        "process.class = smoothed\nprocess.sigma = 0.1\n"
        "horizon = 100000\ntrials = 10\nseed = 10\n"
        "delta = 0.02\nindicator.kind = region\nindicator.mass = 0.02\n"
        "audits = influence\n");
    ExperimentResult result = run_experiment(cfg);
    double secs = seconds_since(t0);
    const AuditReport& rep = result.reports[0];

    // Re-derive the bound with the explicit constants.
    double c1 = std::ldexp(1.0, 2 * cfg.tail_d) * (3.0 + std::log2(cfg.tail_c) / cfg.tail_d);
    double c2 = std::ldexp(1.0, 2 * cfg.tail_d) / cfg.tail_d;
    long bad = 0;
    for (const TrialResult& t : result.trials) {
        double n = static_cast<double>(t.rows.size());
        double gamma = static_cast<double>(std::count(t.flags.begin(), t.flags.end(), 1)) / n;
        double observed = static_cast<double>(t.indicated_nn_hits) / n;
        double bound = gamma * (c1 + c2 * std::log2(1.0 / cfg.delta)) +
                       std::min(1.0, cfg.delta / cfg.sigma) + 5.0 / std::sqrt(n);
        if (observed > bound) ++bad;
    }
    Outcome o;
    o.pass = rep.pass && !rep.skipped && bad == 0 && c1 == 16.0 && c2 == 4.0 && secs < 120.0;
    o.detail = "worst hit rate " + fmt_double(rep.observed) + " vs bound " +
               fmt_double(rep.bound) + " (c1=16, c2=4), " + fmt_double(secs) + "s";
    return o;
}

// 11. Geometry estimators land on known truth: segment dimension ~1,
//     square dimension ~2, line content ~2 (Monte Carlo), point content
//     exactly 1 (interval arithmetic).
Outcome c11_geometry() {
    MetricSpace sq = MetricSpace::unit_cube(MetricKind::sup, 2);
    std::vector<Point> seg;
    for (int i = 0; i <= 4000; ++i) {
        double t = static_cast<double>(i) / 4000.0;
        seg.push_back({t, t});
    }
    BoxDimensionEstimate seg_dim = box_dimension_estimate(sq, seg);

    std::vector<Point> grid;
    for (int i = 0; i < 160; ++i)
        for (int j = 0; j < 160; ++j)
            grid.push_back({static_cast<double>(i) / 159.0, static_cast<double>(j) / 159.0});
    BoxDimensionEstimate sq_dim = box_dimension_estimate(sq, grid);

    ReferenceMeasure nu2 = ReferenceMeasure::lebesgue(sq);
    HalfspaceLabel line_label(sq, {0.0, 1.0}, 0.5);  // boundary: the line y = 1/2
    std::vector<Point> line_pts = line_label.boundary_sample(20000, 1111);
    MinkowskiEstimate line_content =
        minkowski_content_estimate(sq, line_pts, nu2, 2, 10, 1000000, 2222);

    MetricSpace seg1 = MetricSpace::make_interval(-1.0, 1.0);
    ThresholdLabel point_label(seg1, 0.0);
    std::vector<Point> point_pts = point_label.boundary_sample(64, 3);
    MinkowskiEstimate point_content =
        minkowski_content_estimate(seg1, point_pts, ReferenceMeasure::lebesgue(seg1));

    bool ok_seg = seg_dim.slope >= 0.85 && seg_dim.slope <= 1.15;
    bool ok_sq = sq_dim.slope >= 1.8 && sq_dim.slope <= 2.2;
    bool ok_line = std::fabs(line_content.content - 2.0) <= 0.2;
    bool ok_point = point_content.exact && point_content.content == 1.0;
    Outcome o;
    o.pass = ok_seg && ok_sq && ok_line && ok_point;
    o.detail = "segment dim " + fmt_double(seg_dim.slope) + ", square dim " +
               fmt_double(sq_dim.slope) + ", line content " + fmt_double(line_content.content) +
               ", point content " + fmt_double(point_content.content);
    return o;
}

// 12. Determinism: the same root seed reproduces every output file byte
//     for byte, audits included.
Outcome c12_determinism() {
    namespace fs = std::filesystem;
    ExperimentConfig cfg = cfg_of(
        "label.family = threshold\nlabel.threshold = 0.5\n"
        "process.class = smoothed\nprocess.sigma = 0.1\n"
        "horizon = 1500\ntrials = 3\nseed = 12\n"
        "delta = 0.25\nindicator.kind = region\nindicator.mass = 0.05\n"
        "audits = all\n");
    ExperimentResult r1 = run_experiment(cfg);
    ExperimentResult r2 = run_experiment(cfg);

    fs::path dir_a = fs::temp_directory_path() / "nnlab_acceptance_c12_a";
    fs::path dir_b = fs::temp_directory_path() / "nnlab_acceptance_c12_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    emit_outputs(cfg, r1, dir_a.string(), "json");
    emit_outputs(cfg, r2, dir_b.string(), "json");

    int compared = 0, mismatched = 0;
    for (const char* name :
         {"trace_trial0.csv", "trace_trial1.csv", "trace_trial2.csv", "rates.csv",
          "reports.json"}) {
        ++compared;
        if (read_text_file((dir_a / name).string()) != read_text_file((dir_b / name).string()))
            ++mismatched;
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    Outcome o;
    o.pass = compared == 5 && mismatched == 0;
    o.detail = std::to_string(compared) + " files compared, " + std::to_string(mismatched) +
               " mismatched (need 0)";
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*fn)();
    };
    const Criterion criteria[] = {
        {"threshold adversary forces a mistake every round", c01_threshold_adversary},
        {"general adversary pins the halfspace learner near rate 1/2", c02_general_adversary},
        {"mistake sets are mutually labeling across 50 runs", c03_mutual_labeling},
        {"separated events pack within the doubled dyadic balls", c04_hit_packing},
        {"cover-tree tail sets stay below every delta", c05_delta_tail},
        {"neighbor balls double-cover 100000 queries", c06_neighbor_balls},
        {"cover-tree backend matches brute force on 100000 rounds", c07_backend_equivalence},
        {"smoothed-adversary mistake rates fall with the horizon", c08_smoothed_consistency},
        {"fitted rate curve dominates 20 mistake curves", c09_rate_bound},
        {"indicated-NN hit rate obeys the influence bound", c10_influence_bound},
        {"boundary dimension and content estimates land on truth", c11_geometry},
        {"identical seeds reproduce identical outputs", c12_determinism},
    };

    int failed = 0;
    int index = 0;
    for (const Criterion& c : criteria) {
        ++index;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %02d %s — %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", index, c.name,
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("acceptance: %d/12 criteria passed\n", 12 - failed);
    return failed == 0 ? 0 : 1;
}
