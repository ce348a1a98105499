#include "nnlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

namespace nnlab {
namespace {

MetricKind metric_kind_from_config(const std::string& s) {
    if (s == "sup") return MetricKind::sup;
    if (s == "euclidean") return MetricKind::euclidean;
    if (s == "interval") return MetricKind::interval;
    throw ConfigError("space.kind must be sup, euclidean or interval (got '" + s + "')");
}

std::vector<double> broadcast(std::vector<double> v, int dim, const std::string& key) {
    if (static_cast<int>(v.size()) == dim) return v;
    if (v.size() == 1) return std::vector<double>(dim, v[0]);
    throw ConfigError("config key '" + key + "' needs 1 or space.dim values");
}

std::shared_ptr<const LabelFunction> label_from_kv(KvConfig& kv, const MetricSpace& space) {
    std::string family = kv.get_string("label.family", "threshold");
    try {
        if (family == "threshold")
            return std::make_shared<ThresholdLabel>(space, kv.get_double("label.threshold", 0.0));
        if (family == "halfspace")
            return std::make_shared<HalfspaceLabel>(
                space, kv.get_doubles("label.w", std::vector<double>(space.dim, 1.0)),
                kv.get_double("label.b", 0.0));
        if (family == "union_of_balls") {
            // label.balls = "c0 .. c{dim-1} r; c0 .. c{dim-1} r; ..."
            std::string text = kv.get_string("label.balls");
            std::vector<Ball> balls;
            std::istringstream in(text);
            std::string part;
            while (std::getline(in, part, ';')) {
                std::istringstream bp(part);
                std::vector<double> vals;
                double v;
                while (bp >> v) vals.push_back(v);
                if (static_cast<int>(vals.size()) != space.dim + 1)
                    throw ConfigError("label.balls: each ball needs dim coords plus a radius");
                Ball b;
                b.center.assign(vals.begin(), vals.end() - 1);
                b.radius = vals.back();
                balls.push_back(std::move(b));
            }
            return std::make_shared<UnionOfBallsLabel>(space, std::move(balls));
        }
        if (family == "checkerboard")
            return std::make_shared<CheckerboardLabel>(space, kv.get_int("label.cells", 4));
        if (family == "fractal")
            return std::make_shared<FractalBoundaryLabel>(
                space, kv.get_int("label.depth", 12), kv.get_double("label.hurst", 0.5),
                kv.get_double("label.amp", 0.3), kv.get_u64("label.seed", 7));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("label.family = ") + family + ": " + e.what());
    }
    throw ConfigError("unknown label.family '" + family + "'");
}

}  // namespace

std::vector<std::string> known_audit_names() {
    return {"mutual_labeling", "hit_packing",        "delta_tail",
            "decomposition",   "influence",          "nn_ergodicity",
            "rate_bound",      "smoothness",         "uniform_to_ergodic",
            "backend_equivalence", "consistency_trend"};
}

ExperimentConfig config_from_kv(KvConfig& kv) {
    ExperimentConfig cfg;

    std::string kind_s = kv.get_string("space.kind", "interval");
    MetricKind kind = metric_kind_from_config(kind_s);
    int dim = kv.get_int("space.dim", 1);
    if (dim < 1 || dim > 3) throw ConfigError("space.dim must be 1, 2 or 3");
    std::vector<double> lo = broadcast(
        kv.get_doubles("space.lo", std::vector<double>{0.0}), dim, "space.lo");
    std::vector<double> hi = broadcast(
        kv.get_doubles("space.hi", std::vector<double>{1.0}), dim, "space.hi");
    try {
        cfg.space = MetricSpace::make_box(kind, lo, hi);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("space: ") + e.what());
    }
    cfg.space.doubling_c = kv.get_double("space.doubling_c", cfg.space.doubling_c);
    cfg.space.doubling_d = kv.get_int("space.doubling_d", cfg.space.doubling_d);

    std::string measure_s = kv.get_string("measure", "lebesgue");
    if (measure_s != "lebesgue")
        throw ConfigError("measure: only 'lebesgue' is supported (got '" + measure_s + "')");
    cfg.measure = ReferenceMeasure::lebesgue(cfg.space);

    cfg.label = label_from_kv(kv, cfg.space);

    std::string cls = kv.get_string("process.class", "iid");
    try {
        cfg.process_class = process_class_from_string(cls);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    cfg.sigma = kv.get_double("process.sigma", 0.1);
    cfg.alpha = kv.get_double("process.alpha", 0.5);
    std::string policy = kv.get_string("process.policy", "midpoint_mistake");
    if (policy == "midpoint_mistake")
        cfg.policy = AttackPolicy::midpoint_mistake;
    else if (policy == "fixed_focus")
        cfg.policy = AttackPolicy::fixed_focus;
    else
        throw ConfigError("process.policy must be midpoint_mistake or fixed_focus");
    if (kv.has("process.focus"))
        cfg.focus = broadcast(kv.get_doubles("process.focus"), dim, "process.focus");

    cfg.horizon = kv.get_long("horizon", 1000);
    if (cfg.horizon < 1) throw ConfigError("horizon must be >= 1");
    cfg.trials = kv.get_int("trials", 1);
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    cfg.seed = kv.get_u64("seed", 1);
    std::string backend = kv.get_string("backend", "cover_tree");
    try {
        cfg.backend = learner_backend_from_string(backend);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    std::vector<std::string> audits = kv.get_strings("audits", {"all"});
    if (audits.size() == 1 && audits[0] == "all")
        cfg.audits = known_audit_names();
    else if (audits.size() == 1 && audits[0] == "none")
        cfg.audits = {};
    else {
        auto known = known_audit_names();
        for (const std::string& a : audits)
            if (std::find(known.begin(), known.end(), a) == known.end())
                throw ConfigError("unknown audit '" + a + "'");
        cfg.audits = audits;
    }

    cfg.delta = kv.get_double("delta", 0.25);
    if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw ConfigError("delta must be in (0, 1]");
    cfg.tail_c = kv.get_double("c", cfg.space.doubling_c);
    cfg.tail_d = kv.get_int("d", cfg.space.doubling_d);
    if (cfg.tail_c <= 0.0 || cfg.tail_d < 1) throw ConfigError("c must be > 0 and d >= 1");
    cfg.azuma_p = kv.get_double("azuma_p", 0.05);
    if (!(cfg.azuma_p > 0.0 && cfg.azuma_p < 1.0)) throw ConfigError("azuma_p must be in (0, 1)");

    std::string ind = kv.get_string("indicator.kind", "none");
    if (ind == "none") {
        cfg.indicator = IndicatorProcess::none();
    } else if (ind == "region") {
        Box b;
        if (kv.has("indicator.lo") || kv.has("indicator.hi")) {
            b.lo = broadcast(kv.get_doubles("indicator.lo"), dim, "indicator.lo");
            b.hi = broadcast(kv.get_doubles("indicator.hi"), dim, "indicator.hi");
            for (int i = 0; i < dim; ++i)
                if (!(b.lo[i] <= b.hi[i])) throw ConfigError("indicator region has lo > hi");
        } else {
            // Window of prescribed mass, centered unless indicator.center says otherwise.
            double mass = kv.get_double("indicator.mass");
            if (!(mass > 0.0 && mass <= 1.0))
                throw ConfigError("indicator.mass must be in (0, 1]");
            Point center(dim);
            for (int i = 0; i < dim; ++i)
                center[i] = 0.5 * (cfg.space.domain.lo[i] + cfg.space.domain.hi[i]);
            if (kv.has("indicator.center"))
                center = broadcast(kv.get_doubles("indicator.center"), dim, "indicator.center");
            b = centered_mass_window(cfg.space, center, mass);
        }
        cfg.indicator_mass = cfg.measure.mass_of_box(b).value;
        cfg.indicator = IndicatorProcess::region(std::move(b));
    } else {
        throw ConfigError("indicator.kind must be none or region");
    }

    kv.require_all_used();

    // Fail unsupported combinations before any trial runs.
    try {
        make_generator(cfg, 0);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("process: ") + e.what());
    }
    return cfg;
}

std::unique_ptr<ProcessGenerator> make_generator(const ExperimentConfig& cfg,
                                                 std::uint64_t seed) {
    switch (cfg.process_class) {
        case ProcessClass::iid: return std::make_unique<IidGenerator>(cfg.measure, seed);
        case ProcessClass::smoothed:
            return std::make_unique<SmoothedGenerator>(cfg.measure, cfg.sigma, cfg.policy,
                                                       cfg.focus, seed);
        case ProcessClass::dominated:
            return std::make_unique<DominatedGenerator>(cfg.measure, cfg.sigma, cfg.alpha,
                                                        cfg.policy, cfg.focus, seed);
        case ProcessClass::worst_threshold:
            return std::make_unique<WorstThresholdGenerator>(cfg.space, seed);
        case ProcessClass::worst_general:
            return std::make_unique<WorstGeneralGenerator>(cfg.label, seed);
    }
    throw std::invalid_argument("unhandled process class");
}

namespace {

// Shared bookkeeping for one arriving round: indicated-NN accounting,
// separated-event charge, indicated-tree growth, and the trace row.
void bookkeep_round(const ExperimentConfig& cfg, TrialResult& res, const Point& x,
                    const RoundRecord& rec, bool flag, long& cum) {
    int n = rec.n;
    std::string keys;
    if (rec.nn_index && res.flags[static_cast<std::size_t>(*rec.nn_index) - 1]) {
        ++res.indicated_nn_hits;
        DecompositionCheck dc = decomposition_check(*res.indicated_tree, x, *rec.nn_distance);
        if (dc.applicable) {
            res.sep_log.charge(dc.node, dc.level, n, x);
            keys = std::to_string(dc.node) + ":" + std::to_string(dc.level);
            if (!dc.ok) {
                ++res.decomposition_defects;
                res.defect_witnesses.push_back(
                    "trial " + std::to_string(res.trial) + " round " + std::to_string(n) +
                    ": separation " + fmt_double(dc.separation_scaled) + " center dist " +
                    fmt_double(dc.center_dist_scaled) + " at level " + std::to_string(dc.level));
            }
        }
    }
    if (flag) res.indicated_tree->insert(x, static_cast<std::size_t>(n));
    res.flags.push_back(flag ? 1 : 0);
    if (rec.mistake) ++cum;
    TraceRow row;
    row.rec = rec;
    row.cum_mistakes = cum;
    row.rate = static_cast<double>(cum) / static_cast<double>(n);
    row.sep_event_keys = keys;
    row.indicator_flag = flag ? 1 : 0;
    res.rows.push_back(std::move(row));
}

void finish_trial(TrialResult& res, long horizon) {
    res.final_rate = res.rows.empty() ? 0.0 : res.rows.back().rate;
    for (long c : checkpoints(horizon)) {
        long cum = res.rows[static_cast<std::size_t>(c) - 1].cum_mistakes;
        res.checkpoint_mistakes.emplace_back(c, cum);
    }
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, int trial) {
    TrialResult res;
    res.trial = trial;
    res.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial) + 1, 0);
    res.indicated_tree.emplace(cfg.space);
    auto gen = make_generator(cfg, derive_seed(res.seed, 1, 0));
    NearestNeighborLearner learner(cfg.space, cfg.backend);

    std::vector<Point> history;
    std::vector<RoundRecord> records;
    history.reserve(static_cast<std::size_t>(cfg.horizon));
    records.reserve(static_cast<std::size_t>(cfg.horizon));
    res.rows.reserve(static_cast<std::size_t>(cfg.horizon));
    res.flags.reserve(static_cast<std::size_t>(cfg.horizon));

    long cum = 0;
    std::ptrdiff_t last_usable_mistake = -1;
    for (long n = 1; n <= cfg.horizon; ++n) {
        ProcessContext ctx = make_context(history, records, static_cast<int>(n));
        ctx.mistake_hint = true;
        ctx.last_usable_mistake = last_usable_mistake;
        Point x = gen->next_instance(ctx);
        RoundRecord rec = learner.predict_and_update(x, *cfg.label);
        bool flag = cfg.indicator.flag(x, static_cast<int>(n));
        bookkeep_round(cfg, res, x, rec, flag, cum);
        history.push_back(std::move(x));
        if (rec.mistake && rec.nn_index.has_value())
            last_usable_mistake = static_cast<std::ptrdiff_t>(records.size());
        records.push_back(std::move(rec));
    }
    finish_trial(res, cfg.horizon);
    return res;
}

TrialResult rebuild_trial_from_rows(const ExperimentConfig& cfg, int trial,
                                    std::vector<TraceRow> rows) {
    TrialResult res;
    res.trial = trial;
    res.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial) + 1, 0);
    res.indicated_tree.emplace(cfg.space);
    long cum = 0;
    std::vector<TraceRow> stored = std::move(rows);
    res.rows.reserve(stored.size());
    res.flags.reserve(stored.size());
    for (const TraceRow& row : stored)
        bookkeep_round(cfg, res, row.rec.instance, row.rec, row.indicator_flag != 0, cum);
    if (!res.rows.empty()) finish_trial(res, static_cast<long>(res.rows.size()));
    return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult result;
    result.trials.reserve(static_cast<std::size_t>(cfg.trials));
    if (cfg.trials == 1) {
        result.trials.push_back(run_trial(cfg, 0));
    } else {
        std::vector<std::future<TrialResult>> futures;
        futures.reserve(static_cast<std::size_t>(cfg.trials));
        for (int t = 0; t < cfg.trials; ++t)
            futures.push_back(
                std::async(std::launch::async, [&cfg, t]() { return run_trial(cfg, t); }));
        for (auto& f : futures) result.trials.push_back(f.get());
    }
    result.reports = audit_suite(cfg, result.trials, /*live_generator=*/true);
    return result;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void emit_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                  const std::string& out_dir, const std::string& format) {
    if (format != "csv" && format != "json")
        throw ConfigError("format must be csv or json (got '" + format + "')");
    std::filesystem::create_directories(out_dir);
    for (const TrialResult& trial : result.trials)
        write_text_file(out_dir + "/trace_trial" + std::to_string(trial.trial) + ".csv",
                        trace_to_csv(cfg.space.dim, trial.rows));

    std::string rates = "trial,n,cum_mistakes,rate\n";
    for (const TrialResult& trial : result.trials)
        for (auto [n, cum] : trial.checkpoint_mistakes)
            rates += std::to_string(trial.trial) + "," + std::to_string(n) + "," +
                     std::to_string(cum) + "," +
                     fmt_double(static_cast<double>(cum) / static_cast<double>(n)) + "\n";
    write_text_file(out_dir + "/rates.csv", rates);

    if (format == "json")
        write_text_file(out_dir + "/reports.json", audit_reports_to_json(result.reports));
    else
        write_text_file(out_dir + "/reports.csv", audit_reports_to_csv(result.reports));
}

}  // namespace nnlab
