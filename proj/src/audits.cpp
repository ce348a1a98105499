#include "nnlab/audits.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "nnlab/experiment.hpp"
#include "nnlab/geometry.hpp"

namespace nnlab {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string sanitize_csv(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

std::string audit_reports_to_json(const std::vector<AuditReport>& reports) {
    ordered_json arr = ordered_json::array();
    for (const AuditReport& r : reports) {
        ordered_json j;
        j["audit"] = r.audit;
        j["pass"] = r.pass;
        j["observed"] = r.observed;
        j["bound"] = r.bound;
        j["slack"] = r.slack;
        j["witnesses"] = r.witnesses;
        j["skipped"] = r.skipped;
        j["reason"] = r.reason;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::string audit_reports_to_csv(const std::vector<AuditReport>& reports) {
    std::string out = "audit,pass,skipped,observed,bound,slack,reason,witnesses\n";
    for (const AuditReport& r : reports) {
        std::string wit;
        for (const std::string& w : r.witnesses) wit += (wit.empty() ? "" : ";") + sanitize_csv(w);
        out += r.audit;
        out += r.pass ? ",1" : ",0";
        out += r.skipped ? ",1" : ",0";
        out += "," + fmt_double(r.observed) + "," + fmt_double(r.bound) + "," +
               fmt_double(r.slack) + "," + sanitize_csv(r.reason) + "," + wit + "\n";
    }
    return out;
}

bool validate_audit_report_json(const std::string& json_text, std::string* error) {
    auto fail = [&](const std::string& msg) {
        if (error) *error = msg;
        return false;
    };
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        return fail(std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) return fail("top level must be an array");
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& j = doc[i];
        std::string at = "report " + std::to_string(i) + ": ";
        if (!j.is_object()) return fail(at + "must be an object");
        const char* str_keys[] = {"audit", "reason"};
        for (const char* k : str_keys) {
            if (!j.contains(k)) return fail(at + "missing '" + k + "'");
            if (!j[k].is_string()) return fail(at + "'" + k + "' must be a string");
        }
        const char* bool_keys[] = {"pass", "skipped"};
        for (const char* k : bool_keys) {
            if (!j.contains(k)) return fail(at + "missing '" + k + "'");
            if (!j[k].is_boolean()) return fail(at + "'" + k + "' must be a boolean");
        }
        const char* num_keys[] = {"observed", "bound", "slack"};
        for (const char* k : num_keys) {
            if (!j.contains(k)) return fail(at + "missing '" + k + "'");
            if (!j[k].is_number()) return fail(at + "'" + k + "' must be a number");
        }
        if (!j.contains("witnesses") || !j["witnesses"].is_array())
            return fail(at + "'witnesses' must be an array");
        for (const auto& w : j["witnesses"])
            if (!w.is_string()) return fail(at + "witness entries must be strings");
        for (const auto& [key, val] : j.items()) {
            static const char* allowed[] = {"audit",     "pass",    "observed", "bound",
                                            "slack",     "witnesses", "skipped", "reason"};
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) return fail(at + "unexpected key '" + key + "'");
        }
        if (!j["pass"].get<bool>() && j["witnesses"].empty())
            return fail(at + "failed audits must carry witnesses");
    }
    return true;
}

// ---------------------------------------------------------------------
// The audit suite.

namespace {

AuditReport skip(const std::string& name, const std::string& reason) {
    AuditReport r;
    r.audit = name;
    r.skipped = true;
    r.reason = reason;
    return r;
}

bool declared_rate(const ExperimentConfig& cfg) {
    return cfg.process_class == ProcessClass::iid || cfg.process_class == ProcessClass::smoothed ||
           cfg.process_class == ProcessClass::dominated;
}

double eps_of(const ExperimentConfig& cfg, double delta) {
    switch (cfg.process_class) {
        case ProcessClass::iid: return std::min(1.0, delta);
        case ProcessClass::smoothed: return std::min(1.0, delta / cfg.sigma);
        case ProcessClass::dominated:
            return std::min(1.0, std::pow(delta / cfg.sigma, cfg.alpha));
        default: return 1.0;
    }
}

// Explicit constants of the long-term influence bound for the rescaled
// unit-diameter space with upper doubling parameters (c, d).
double influence_c1(double c, int d) {
    return std::ldexp(1.0, 2 * d) * (3.0 + std::log2(c) / d);
}
double influence_c2(int d) { return std::ldexp(1.0, 2 * d) / d; }

AuditReport audit_mutual_labeling(const ExperimentConfig& cfg,
                                  const std::vector<TrialResult>& trials) {
    AuditReport rep;
    rep.audit = "mutual_labeling";
    rep.bound = 1.0;
    for (const TrialResult& trial : trials) {
        std::vector<const Point*> mistakes;
        for (const TraceRow& row : trial.rows)
            if (row.rec.mistake) mistakes.push_back(&row.rec.instance);
        for (const TraceRow& row : trial.rows) {
            auto ball = mutually_labeling_ball(*cfg.label, row.rec.instance);
            if (!ball) continue;  // boundary point: no certified ball
            long count = 0;
            for (const Point* m : mistakes)
                if (distance(cfg.space, *m, ball->center) < ball->radius) ++count;
            rep.observed = std::max(rep.observed, static_cast<double>(count));
            if (count > 1) {
                rep.pass = false;
                rep.witnesses.push_back("trial " + std::to_string(trial.trial) + " round " +
                                        std::to_string(row.rec.n) + ": certified ball holds " +
                                        std::to_string(count) + " mistaken rounds");
            }
        }
    }
    if (!rep.pass) rep.reason = "a certified mutually-labeling ball holds multiple mistakes";
    return rep;
}

AuditReport audit_hit_packing(const ExperimentConfig& cfg,
                              const std::vector<TrialResult>& trials) {
    (void)cfg;
    AuditReport rep;
    rep.audit = "hit_packing";
    std::size_t charges = 0;
    for (const TrialResult& trial : trials) charges += trial.sep_log.total();
    if (charges == 0) return skip(rep.audit, "no separated-event charges in these runs");
    for (const TrialResult& trial : trials) {
        PackingAuditReport p = packing_bound_audit(trial.sep_log, *trial.indicated_tree);
        rep.observed += static_cast<double>(p.violations.size());
        if (!p.pass) {
            rep.pass = false;
            for (const std::string& v : p.violations)
                rep.witnesses.push_back("trial " + std::to_string(trial.trial) + ": " + v);
        }
    }
    if (!rep.pass) rep.reason = "separated-event packing violated";
    return rep;
}

AuditReport audit_delta_tail(const ExperimentConfig& cfg,
                             const std::vector<TrialResult>& trials) {
    AuditReport rep;
    rep.audit = "delta_tail";
    rep.bound = cfg.delta;
    TailConfig tail{cfg.delta, cfg.tail_c, cfg.tail_d};
    bool any = false;
    for (const TrialResult& trial : trials) {
        const CoverTree& tree = *trial.indicated_tree;
        if (tree.empty()) continue;
        if (cfg.space.dim > 1 && tree.size() > 4000)
            return skip(rep.audit,
                        "tail mass needs Monte Carlo over too many balls; see the acceptance "
                        "suite for the full-scale check");
        any = true;
        MassEstimate m = tree.tail_set_mass(tail, cfg.measure);
        double slack = m.exact ? 0.0 : 3.0 * m.stderr_;
        rep.slack = std::max(rep.slack, slack);
        rep.observed = std::max(rep.observed, m.value);
        if (!(m.value < cfg.delta + slack)) {
            rep.pass = false;
            rep.witnesses.push_back("trial " + std::to_string(trial.trial) + ": tail mass " +
                                    fmt_double(m.value) + " >= delta " + fmt_double(cfg.delta));
        }
    }
    if (!any) return skip(rep.audit, "no indicated instances, so no cover tree to check");
    if (!rep.pass) rep.reason = "tail set mass exceeded delta";
    return rep;
}

AuditReport audit_decomposition(const ExperimentConfig& cfg,
                                const std::vector<TrialResult>& trials) {
    (void)cfg;
    AuditReport rep;
    rep.audit = "decomposition";
    std::size_t charges = 0;
    for (const TrialResult& trial : trials) charges += trial.sep_log.total();
    if (charges == 0) return skip(rep.audit, "no separated-event charges in these runs");
    for (const TrialResult& trial : trials) {
        rep.observed += static_cast<double>(trial.decomposition_defects);
        for (const std::string& w : trial.defect_witnesses) rep.witnesses.push_back(w);
    }
    if (rep.observed > 0.0) {
        rep.pass = false;
        rep.reason = "neighbor-ball separation/centering defect";
    }
    return rep;
}

AuditReport audit_influence(const ExperimentConfig& cfg, const std::vector<TrialResult>& trials) {
    AuditReport rep;
    rep.audit = "influence";
    if (!declared_rate(cfg))
        return skip(rep.audit, "process declares no domination rate (out of model)");
    if (cfg.indicator.kind() != IndicatorProcess::Kind::region)
        return skip(rep.audit, "no indicator region configured");
    double c1 = influence_c1(cfg.tail_c, cfg.tail_d);
    double c2 = influence_c2(cfg.tail_d);
    double worst_gap = -1e300;
    for (const TrialResult& trial : trials) {
        double n = static_cast<double>(trial.rows.size());
        if (n == 0.0) continue;
        double gamma_hat =
            static_cast<double>(std::count(trial.flags.begin(), trial.flags.end(), 1)) / n;
        double observed = static_cast<double>(trial.indicated_nn_hits) / n;
        double bound = gamma_hat * (c1 + c2 * std::log2(1.0 / cfg.delta)) +
                       eps_of(cfg, cfg.delta) + 5.0 / std::sqrt(n);
        if (observed - bound > worst_gap) {
            worst_gap = observed - bound;
            rep.observed = observed;
            rep.bound = bound;
        }
        if (observed > bound) {
            rep.pass = false;
            rep.witnesses.push_back("trial " + std::to_string(trial.trial) + ": hit rate " +
                                    fmt_double(observed) + " > bound " + fmt_double(bound));
        }
    }
    if (!rep.pass) rep.reason = "indicated-NN hit rate exceeded the influence bound";
    return rep;
}

AuditReport audit_nn_ergodicity(const ExperimentConfig& cfg,
                                const std::vector<TrialResult>& trials) {
    AuditReport rep;
    rep.audit = "nn_ergodicity";
    if (!declared_rate(cfg))
        return skip(rep.audit, "process declares no domination rate (out of model)");
    if (cfg.indicator.kind() != IndicatorProcess::Kind::region)
        return skip(rep.audit, "no indicator region configured");
    if (!(cfg.indicator_mass < cfg.delta))
        return skip(rep.audit, "indicator region mass is not below delta");
    double c1 = influence_c1(cfg.tail_c, cfg.tail_d);
    double c2 = influence_c2(cfg.tail_d);
    double eps0 = eps_of(cfg, cfg.delta);
    double worst_gap = -1e300;
    for (const TrialResult& trial : trials) {
        double n = static_cast<double>(trial.rows.size());
        if (n == 0.0) continue;
        double best = 2.0;
        for (int t = 0; t <= 40; ++t) {
            double delta = std::ldexp(1.0, -t);
            best = std::min(best, (c1 + c2 * std::log2(1.0 / delta)) * eps0 + eps_of(cfg, delta));
        }
        double bound = best + 5.0 / std::sqrt(n);
        double observed = static_cast<double>(trial.indicated_nn_hits) / n;
        if (observed - bound > worst_gap) {
            worst_gap = observed - bound;
            rep.observed = observed;
            rep.bound = bound;
        }
        if (observed > bound) {
            rep.pass = false;
            rep.witnesses.push_back("trial " + std::to_string(trial.trial) + ": NN-in-A rate " +
                                    fmt_double(observed) + " > bound " + fmt_double(bound));
        }
    }
    if (!rep.pass) rep.reason = "nearest neighbor process not ergodically dominated as bounded";
    return rep;
}

AuditReport audit_rate_bound(const ExperimentConfig& cfg, const std::vector<TrialResult>& trials) {
    AuditReport rep;
    rep.audit = "rate_bound";
    if (!declared_rate(cfg))
        return skip(rep.audit, "process declares no domination rate (out of model)");
    if (!cfg.label->has_boundary_sampler())
        return skip(rep.audit, "label family has no boundary sampler to fit the geometry");

    std::vector<Point> boundary = cfg.label->boundary_sample(20000, derive_seed(cfg.seed, 0xB0, 0));
    BoxDimensionEstimate bde = box_dimension_estimate(cfg.space, boundary);
    MinkowskiEstimate mink = minkowski_content_estimate(cfg.space, boundary, cfg.measure);

    RateCurveParams prm;
    prm.sigma = cfg.process_class == ProcessClass::iid ? 1.0 : cfg.sigma;
    prm.alpha = cfg.process_class == ProcessClass::dominated ? cfg.alpha : 1.0;
    prm.b_hat = std::max(bde.slope, 0.0);
    prm.m_hat = std::max(mink.content, 0.0);
    prm.p = cfg.azuma_p;
    prm.r0 = 0.5;

    std::vector<double> radii, counts;
    for (int j = 1; j <= 6; ++j) {
        double r = std::ldexp(1.0, -j);
        MlCoverEstimate ml = ml_covering_number_estimate(*cfg.label, cfg.measure, r);
        radii.push_back(r);
        counts.push_back(static_cast<double>(std::max(ml.count, 1)));
    }
    prm.C = std::max(fit_rate_constant(radii, counts, prm.b_hat + prm.c1), 1.0);

    int ok_trials = 0;
    double worst_ratio = 0.0;
    for (const TrialResult& trial : trials) {
        bool ok = true;
        for (auto [n, cum] : trial.checkpoint_mistakes) {
            double bound = rate_curve_bound(static_cast<double>(n), prm);
            double ratio = bound > 0.0 ? static_cast<double>(cum) / bound : 1e300;
            worst_ratio = std::max(worst_ratio, ratio);
            if (static_cast<double>(cum) > bound) {
                ok = false;
                rep.witnesses.push_back("trial " + std::to_string(trial.trial) + " checkpoint " +
                                        std::to_string(n) + ": " + std::to_string(cum) +
                                        " mistakes > bound " + fmt_double(bound));
            }
        }
        if (ok) ++ok_trials;
    }
    rep.observed = worst_ratio;
    rep.bound = 1.0;
    double frac = trials.empty() ? 1.0 : static_cast<double>(ok_trials) / trials.size();
    rep.pass = frac >= 0.95 - 1e-12;
    if (rep.pass) rep.witnesses.clear();
    if (!rep.pass) rep.reason = "mistake curve exceeded the fitted rate bound too often";
    return rep;
}

AuditReport audit_smoothness(const ExperimentConfig& cfg, const std::vector<TrialResult>& trials,
                             bool live_generator) {
    AuditReport rep;
    rep.audit = "smoothness";
    if (!live_generator)
        return skip(rep.audit, "requires resampling the live generator; run via simulate");
    if (trials.empty() || trials[0].rows.empty()) return skip(rep.audit, "no trial data");

    const TrialResult& trial = trials[0];
    std::vector<Point> history;
    std::vector<RoundRecord> records;
    history.reserve(trial.rows.size());
    for (const TraceRow& row : trial.rows) {
        history.push_back(row.rec.instance);
        records.push_back(row.rec);
    }
    Point center(cfg.space.dim);
    for (int i = 0; i < cfg.space.dim; ++i)
        center[i] = 0.5 * (cfg.space.domain.lo[i] + cfg.space.domain.hi[i]);
    std::vector<Box> sets;
    for (double mass : {0.5, 0.1, 0.02}) sets.push_back(centered_mass_window(cfg.space, center, mass));
    if (cfg.indicator.kind() == IndicatorProcess::Kind::region)
        sets.push_back(cfg.indicator.box());

    auto gen = make_generator(cfg, derive_seed(trial.seed, 1, 0));
    int stride = std::max<int>(1, static_cast<int>(history.size() / 50));
    SmoothnessReport sr = smoothness_audit(*gen, cfg.measure, history, records, sets, 200, stride,
                                           derive_seed(cfg.seed, 0xA0D17, 0));
    for (const SmoothnessSetReport& s : sr.sets) {
        if (s.worst_rate > rep.observed) {
            rep.observed = s.worst_rate;
            rep.bound = s.bound;
        }
        if (sr.declared && !s.dominated) {
            rep.pass = false;
            rep.witnesses.push_back("set of mass " + fmt_double(s.mass) + ": conditional rate " +
                                    fmt_double(s.worst_rate) + " at round " +
                                    std::to_string(s.worst_round) + " > bound " +
                                    fmt_double(s.bound));
        }
    }
    if (!sr.declared)
        rep.reason = "process declares no rate; rates reported for information only";
    if (!rep.pass) rep.reason = "declared domination rate violated";
    return rep;
}

AuditReport audit_uniform_to_ergodic(const ExperimentConfig& cfg,
                                     const std::vector<TrialResult>& trials) {
    AuditReport rep;
    rep.audit = "uniform_to_ergodic";
    if (!declared_rate(cfg))
        return skip(rep.audit, "process declares no domination rate (out of model)");
    if (cfg.indicator.kind() != IndicatorProcess::Kind::region)
        return skip(rep.audit, "no indicator region configured");
    if (!(cfg.indicator_mass < cfg.delta))
        return skip(rep.audit, "indicator region mass is not below delta");
    for (const TrialResult& trial : trials) {
        double n = static_cast<double>(trial.rows.size());
        if (n == 0.0) continue;
        double gamma_hat =
            static_cast<double>(std::count(trial.flags.begin(), trial.flags.end(), 1)) / n;
        double bound = eps_of(cfg, cfg.delta) + 5.0 / std::sqrt(n);
        rep.observed = std::max(rep.observed, gamma_hat);
        rep.bound = bound;
        if (gamma_hat > bound) {
            rep.pass = false;
            rep.witnesses.push_back("trial " + std::to_string(trial.trial) + ": hit frequency " +
                                    fmt_double(gamma_hat) + " > bound " + fmt_double(bound));
        }
    }
    if (!rep.pass) rep.reason = "time-averaged hit frequency exceeded eps(delta) plus slack";
    return rep;
}

AuditReport audit_backend_equivalence(const ExperimentConfig& cfg,
                                      const std::vector<TrialResult>& trials) {
    AuditReport rep;
    rep.audit = "backend_equivalence";
    if (trials.empty() || trials[0].rows.empty()) return skip(rep.audit, "no trial data");
    if (trials[0].rows.size() > 20000)
        return skip(rep.audit,
                    "brute-force replay capped at 20000 rounds; see the acceptance suite for "
                    "the full-scale check");
    std::vector<Point> stream;
    stream.reserve(trials[0].rows.size());
    for (const TraceRow& row : trials[0].rows) stream.push_back(row.rec.instance);
    BackendEquivalenceReport r = backend_equivalence_check(cfg.space, stream, *cfg.label);
    rep.observed = static_cast<double>(r.defects.size());
    rep.bound = 0.0;
    if (!r.pass) {
        rep.pass = false;
        rep.witnesses = r.defects;
        rep.reason = "cover-tree backend diverged from brute force";
    }
    return rep;
}

AuditReport audit_consistency_trend(const ExperimentConfig& cfg,
                                    const std::vector<TrialResult>& trials) {
    AuditReport rep;
    rep.audit = "consistency_trend";
    if (!declared_rate(cfg))
        return skip(rep.audit, "process declares no domination rate (out of model)");
    if (trials.empty() || trials[0].checkpoint_mistakes.size() < 2)
        return skip(rep.audit, "needs at least two reporting checkpoints");
    std::size_t n_cp = trials[0].checkpoint_mistakes.size();
    auto median_rate = [&](std::size_t cp) {
        std::vector<double> rates;
        for (const TrialResult& trial : trials) {
            auto [n, cum] = trial.checkpoint_mistakes[cp];
            rates.push_back(static_cast<double>(cum) / static_cast<double>(n));
        }
        std::sort(rates.begin(), rates.end());
        std::size_t m = rates.size();
        return m % 2 == 1 ? rates[m / 2] : 0.5 * (rates[m / 2 - 1] + rates[m / 2]);
    };
    double first = median_rate(0);
    double last = median_rate(n_cp - 1);
    rep.observed = last;
    rep.bound = first;
    if (last > first) {
        rep.pass = false;
        rep.witnesses.push_back("median rate rose from " + fmt_double(first) + " to " +
                                fmt_double(last));
        rep.reason = "median mistake rate did not fall across checkpoints";
    }
    return rep;
}

}  // namespace

std::vector<AuditReport> audit_suite(const ExperimentConfig& cfg,
                                     const std::vector<TrialResult>& trials, bool live_generator) {
    std::vector<AuditReport> reports;
    for (const std::string& name : cfg.audits) {
        if (name == "mutual_labeling")
            reports.push_back(audit_mutual_labeling(cfg, trials));
        else if (name == "hit_packing")
            reports.push_back(audit_hit_packing(cfg, trials));
        else if (name == "delta_tail")
            reports.push_back(audit_delta_tail(cfg, trials));
        else if (name == "decomposition")
            reports.push_back(audit_decomposition(cfg, trials));
        else if (name == "influence")
            reports.push_back(audit_influence(cfg, trials));
        else if (name == "nn_ergodicity")
            reports.push_back(audit_nn_ergodicity(cfg, trials));
        else if (name == "rate_bound")
            reports.push_back(audit_rate_bound(cfg, trials));
        else if (name == "smoothness")
            reports.push_back(audit_smoothness(cfg, trials, live_generator));
        else if (name == "uniform_to_ergodic")
            reports.push_back(audit_uniform_to_ergodic(cfg, trials));
        else if (name == "backend_equivalence")
            reports.push_back(audit_backend_equivalence(cfg, trials));
        else if (name == "consistency_trend")
            reports.push_back(audit_consistency_trend(cfg, trials));
        else
            throw ConfigError("unknown audit '" + name + "'");
    }
    return reports;
}

}  // namespace nnlab
