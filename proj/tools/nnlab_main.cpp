// nnlab command-line harness.
//
// Subcommands:
//   simulate  — run the configured experiment, write traces + audit reports
//   audit     — re-run audits from traces stored by a previous simulate
//   geometry  — estimate boundary box dimension and Minkowski content
//   covertree — build a cover tree from measure samples, dump it, check tail mass
//   report    — re-emit reports and rate curves from stored traces
//
// Exit codes: 0 all audits passed or were skipped, 1 at least one audit
// failed, 2 configuration error (bad file, unknown key, invalid value).

#include "CLI11.hpp"

#include "nnlab/audits.hpp"
#include "nnlab/config.hpp"
#include "nnlab/experiment.hpp"
#include "nnlab/geometry.hpp"
#include "nnlab/trace.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace nnlab;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::string format = "json";
    std::optional<std::uint64_t> seed;
    std::optional<long> trials;
    std::optional<long> horizon;
};

void add_common(CLI::App* cmd, CommonOpts* o, bool with_overrides) {
    cmd->add_option("--config", o->config_path, "path to key=value config file")
        ->required();
    cmd->add_option("--out", o->out_dir, "output directory");
    cmd->add_option("--format", o->format, "report format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    if (with_overrides) {
        cmd->add_option("--seed", o->seed, "override root seed");
        cmd->add_option("--trials", o->trials, "override trial count");
        cmd->add_option("--horizon", o->horizon, "override rounds per trial");
    }
}

ExperimentConfig load_config(const CommonOpts& o) {
    KvConfig kv = KvConfig::parse_file(o.config_path);
    if (o.seed) kv.set("seed", std::to_string(*o.seed));
    if (o.trials) kv.set("trials", std::to_string(*o.trials));
    if (o.horizon) kv.set("horizon", std::to_string(*o.horizon));
    return config_from_kv(kv);
}

int summarize(const std::vector<AuditReport>& reports) {
    bool any_fail = false;
    for (const auto& r : reports) {
        const char* tag = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
        std::printf("[%s] %-20s observed=%s bound=%s", tag, r.audit.c_str(),
                    fmt_double(r.observed).c_str(), fmt_double(r.bound).c_str());
        if (!r.reason.empty()) std::printf("  (%s)", r.reason.c_str());
        std::printf("\n");
        if (!r.pass && !r.skipped) any_fail = true;
    }
    return any_fail ? 1 : 0;
}

std::vector<TrialResult> load_trials(const ExperimentConfig& cfg,
                                     const std::string& out_dir) {
    std::vector<TrialResult> trials;
    for (int t = 0;; ++t) {
        std::filesystem::path p =
            std::filesystem::path(out_dir) / ("trace_trial" + std::to_string(t) + ".csv");
        if (!std::filesystem::exists(p)) break;
        std::vector<TraceRow> rows = trace_from_csv(read_text_file(p.string()));
        trials.push_back(rebuild_trial_from_rows(cfg, t, rows));
    }
    if (trials.empty())
        throw ConfigError("no trace files found under " + out_dir +
                          " (expected trace_trial0.csv, ...)");
    return trials;
}

int cmd_simulate(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    ExperimentResult res = run_experiment(cfg);
    emit_outputs(cfg, res, o.out_dir, o.format);
    std::printf("simulate: %d trial(s), horizon %ld, final rate %s\n", cfg.trials,
                cfg.horizon, fmt_double(res.trials.back().final_rate).c_str());
    return summarize(res.reports);
}

int cmd_audit(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    std::vector<TrialResult> trials = load_trials(cfg, o.out_dir);
    std::vector<AuditReport> reports = audit_suite(cfg, trials, /*live_generator=*/false);
    ExperimentResult res;
    res.trials = std::move(trials);
    res.reports = reports;
    std::filesystem::create_directories(o.out_dir);
    if (o.format == "json")
        write_text_file((std::filesystem::path(o.out_dir) / "reports.json").string(),
                        audit_reports_to_json(reports));
    else
        write_text_file((std::filesystem::path(o.out_dir) / "reports.csv").string(),
                        audit_reports_to_csv(reports));
    std::printf("audit: %zu trial(s) loaded from %s\n", res.trials.size(),
                o.out_dir.c_str());
    return summarize(reports);
}

int cmd_geometry(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    if (!cfg.label->has_boundary_sampler())
        throw ConfigError("geometry: label family has no boundary sampler");
    std::vector<Point> boundary =
        cfg.label->boundary_sample(20000, derive_seed(cfg.seed, 0xB0, 0));
    BoxDimensionEstimate bde = box_dimension_estimate(cfg.space, boundary);
    MinkowskiEstimate mink =
        minkowski_content_estimate(cfg.space, boundary, cfg.measure);

    std::string csv = "curve,r,value,stderr\n";
    for (std::size_t i = 0; i < bde.radii.size(); ++i)
        csv += "box_dimension," + fmt_double(bde.radii[i]) + "," +
               std::to_string(bde.counts[i]) + ",0\n";
    for (std::size_t i = 0; i < mink.radii.size(); ++i)
        csv += "minkowski," + fmt_double(mink.radii[i]) + "," +
               fmt_double(mink.values[i]) + "," + fmt_double(mink.stderrs[i]) + "\n";
    std::filesystem::create_directories(o.out_dir);
    write_text_file((std::filesystem::path(o.out_dir) / "geometry.csv").string(), csv);

    std::printf("box dimension slope = %s", fmt_double(bde.slope).c_str());
    if (bde.truncated) std::printf("  (small radii truncated: %s)", bde.note.c_str());
    std::printf("\n");
    std::printf("minkowski content  = %s at r = %s%s%s\n",
                fmt_double(mink.content).c_str(), fmt_double(mink.r_used).c_str(),
                mink.exact ? " (exact)" : "",
                mink.note.empty() ? "" : ("; " + mink.note).c_str());
    return 0;
}

int cmd_covertree(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    long n = o.horizon.value_or(500);
    if (n < 1) throw ConfigError("covertree: horizon must be >= 1");
    Rng rng(derive_seed(cfg.seed, 0xC7, 0));
    CoverTree tree(cfg.space);
    for (long i = 0; i < n; ++i) tree.insert(cfg.measure.sample(rng), i + 1);

    std::string dump = tree.dump();
    if (CoverTree::parse(cfg.space, dump).dump() != dump) {
        std::fprintf(stderr, "covertree: dump/parse round trip mismatch\n");
        return 1;
    }
    std::filesystem::create_directories(o.out_dir);
    write_text_file((std::filesystem::path(o.out_dir) / "covertree.txt").string(), dump);

    TailConfig tc{cfg.delta, cfg.tail_c, cfg.tail_d};
    MassEstimate mass = tree.tail_set_mass(tc, cfg.measure);
    double slack = mass.exact ? 0.0 : 3.0 * mass.stderr_;
    bool ok = mass.value < cfg.delta + slack;
    std::printf("covertree: %zu node(s), %zu duplicate(s) skipped\n", tree.size(),
                tree.duplicates_skipped().size());
    std::printf("[%s] tail mass %s vs delta %s%s\n", ok ? "PASS" : "FAIL",
                fmt_double(mass.value).c_str(), fmt_double(cfg.delta).c_str(),
                mass.exact ? " (exact)" : " (monte carlo)");
    return ok ? 0 : 1;
}

int cmd_report(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    ExperimentResult res;
    res.trials = load_trials(cfg, o.out_dir);
    res.reports = audit_suite(cfg, res.trials, /*live_generator=*/false);
    emit_outputs(cfg, res, o.out_dir, o.format);
    std::printf("report: re-emitted %zu trial(s) in %s format\n", res.trials.size(),
                o.format.c_str());
    return summarize(res.reports);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online nearest-neighbor laboratory"};
    app.require_subcommand(1);

    CommonOpts sim_o, audit_o, geo_o, tree_o, report_o;
    CLI::App* sim = app.add_subcommand("simulate", "run experiment and audits");
    add_common(sim, &sim_o, true);
    CLI::App* aud = app.add_subcommand("audit", "re-run audits from stored traces");
    add_common(aud, &audit_o, false);
    CLI::App* geo = app.add_subcommand("geometry", "boundary dimension and content");
    add_common(geo, &geo_o, true);
    CLI::App* tre = app.add_subcommand("covertree", "build, dump, and check a cover tree");
    add_common(tre, &tree_o, true);
    CLI::App* rep = app.add_subcommand("report", "re-emit reports from stored traces");
    add_common(rep, &report_o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_o);
        if (aud->parsed()) return cmd_audit(audit_o);
        if (geo->parsed()) return cmd_geometry(geo_o);
        if (tre->parsed()) return cmd_covertree(tree_o);
        if (rep->parsed()) return cmd_report(report_o);
    } catch (const nnlab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
