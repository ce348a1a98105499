#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nnlab/audits.hpp"
#include "nnlab/config.hpp"
#include "nnlab/cover_tree.hpp"
#include "nnlab/labels.hpp"
#include "nnlab/learner.hpp"
#include "nnlab/measure.hpp"
#include "nnlab/metric.hpp"
#include "nnlab/process.hpp"
#include "nnlab/trace.hpp"

namespace nnlab {

// Fully resolved experiment description (see README for the key list).
struct ExperimentConfig {
    MetricSpace space;
    ReferenceMeasure measure;
    std::shared_ptr<const LabelFunction> label;

    ProcessClass process_class = ProcessClass::iid;
    double sigma = 0.1;
    double alpha = 0.5;
    AttackPolicy policy = AttackPolicy::midpoint_mistake;
    std::optional<Point> focus;

    long horizon = 1000;
    int trials = 1;
    std::uint64_t seed = 1;
    LearnerBackend backend = LearnerBackend::cover_tree;

    std::vector<std::string> audits;  // resolved audit names, in run order

    // Cover-tree audit parameters: tail mass budget and the upper
    // doubling constants of the unit-diameter rescaled space.
    double delta = 0.25;
    double tail_c = 2.0;
    int tail_d = 1;
    double azuma_p = 0.05;

    IndicatorProcess indicator;
    double indicator_mass = 0.0;  // exact nu-mass of the region, when any
};

// Builds the config from parsed keys (consuming them) and rejects
// unknown keys. Throws ConfigError on any problem.
ExperimentConfig config_from_kv(KvConfig& kv);

// The audit names `audits = all` expands to.
std::vector<std::string> known_audit_names();

// Seed chain: trial t uses derive_seed(root, t + 1, 0); its generator is
// seeded with derive_seed(trial_seed, 1, 0).
std::unique_ptr<ProcessGenerator> make_generator(const ExperimentConfig& cfg, std::uint64_t seed);

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<TraceRow> rows;
    std::vector<std::uint8_t> flags;          // indicator per round
    long indicated_nn_hits = 0;               // rounds whose NN was indicated
    SeparatedEventLog sep_log;
    std::optional<CoverTree> indicated_tree;  // cover tree over indicated instances
    long decomposition_defects = 0;
    std::vector<std::string> defect_witnesses;
    double final_rate = 0.0;
    std::vector<std::pair<long, long>> checkpoint_mistakes;  // (n, cumulative)
};

TrialResult run_trial(const ExperimentConfig& cfg, int trial);

// Reconstructs the bookkeeping of a stored trace (indicated tree,
// charges, hit counts) without re-running the generator or learner.
TrialResult rebuild_trial_from_rows(const ExperimentConfig& cfg, int trial,
                                    std::vector<TraceRow> rows);

struct ExperimentResult {
    std::vector<TrialResult> trials;
    std::vector<AuditReport> reports;
};

// Runs all trials (concurrently, collected in trial order) and then the
// configured audit suite.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Runs the configured audits over finished trials. `live_generator`
// marks audits that must resample the process (smoothness) as runnable;
// pass false when auditing stored traces.
std::vector<AuditReport> audit_suite(const ExperimentConfig& cfg,
                                     const std::vector<TrialResult>& trials, bool live_generator);

// Output layout under out_dir: trace_trial<t>.csv per trial,
// rates.csv (trial,n,cum_mistakes,rate at checkpoints), and
// reports.json or reports.csv per `format`. Byte-stable for identical
// inputs.
void emit_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                  const std::string& out_dir, const std::string& format);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace nnlab
