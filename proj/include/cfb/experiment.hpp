#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfb/config.hpp"
#include "cfb/metrics.hpp"
#include "cfb/sim.hpp"

namespace cfb {

struct ClassThresholdRecord {
    double mu = 0.0;
    double sigma = 0.0;
    double tau = 0.0;
};

/// Aggregated outcome of one mutual-learning epoch.
struct EpochRecord {
    int epoch = 0;
    std::uint64_t step = 0;   // t after this epoch
    double progress = 0.0;    // t / T
    std::optional<double> beta;
    std::map<int, ClassThresholdRecord> per_class;  // adaptive policy only
    FilterConfusion confusion;
    std::optional<double> id_retention;
    std::optional<double> ood_leakage;
    std::optional<double> purity;
    std::optional<double> auroc;
    double teacher_accuracy = 0.0;
    std::uint64_t kept = 0;
    std::uint64_t rejected_low_confidence = 0;
    std::uint64_t rejected_ood = 0;
    std::uint64_t warmup_kept = 0;
    std::uint64_t n_id = 0;
    std::uint64_t n_ood = 0;
};

struct RunResult {
    ExperimentConfig config;
    double burnin_accuracy = 0.0;
    std::vector<EpochRecord> history;

    const EpochRecord& final_epoch() const;
};

/// Burn-in artifacts: the trained pair, the warm bank, the sampler mid-stream
/// and the generated labeled/unlabeled datasets.
struct BurninResult {
    SimState state;
    StreamSampler sampler;
    std::vector<StreamRecord> labeled;
    std::vector<StreamRecord> unlabeled;
    double labeled_accuracy = 0.0;
};

/// Generates the stream, trains the student on labeled data, initializes the
/// teacher from it and warms the bank.
BurninResult run_burnin_stage(const ExperimentConfig& config);

/// Full pipeline: burn-in then `sim.epochs` of teacher-student mutual
/// learning with the configured gate. Bit-identical history for identical
/// configs.
RunResult run_experiment(const ExperimentConfig& config);

/// Teacher predictions for a batch of stream records.
std::vector<PseudoPrediction> predict_batch(const SurrogateDetector& teacher,
                                            std::span<const StreamRecord> records);

/// Applies the configured gate (none / cfb / baseline scorer) after the
/// shared confidence gate. Decisions come back in input order.
std::vector<FilterDecision> gate_predictions(std::span<const PseudoPrediction> preds,
                                             const ExperimentConfig& config,
                                             const FeatureBankSet& banks, ThresholdEngine& engine,
                                             std::uint64_t step);

// --- history serialization ---

/// JSONL: first a config echo record, then one record per epoch. Floats use
/// shortest round-trip formatting; key order is fixed.
void write_history(std::ostream& out, const RunResult& result);
std::string history_to_string(const RunResult& result);

// --- ablation sweeps ---

enum class AblationAxis { bank_length, metric, threshold, bank_update };

AblationAxis parse_ablation_axis(std::string_view name);

struct AblationRow {
    std::string label;
    RunResult result;
};

/// Runs the base config once per value of the chosen axis.
///   bank_length: L in {20, 50, 100, 200, 500}
///   metric:      l1, l2, cosine
///   threshold:   fixed 0.4..0.7 and adaptive beta 0, 1, 2, [1,2], [0,2]
///   bank_update: static, dynamic
std::vector<AblationRow> run_ablation(const ExperimentConfig& base, AblationAxis axis);

/// Plain-text comparison table over final-epoch metrics.
std::string render_ablation_table(std::span<const AblationRow> rows);

/// `report`: one table row per history file (label -> final metrics).
struct HistorySummary {
    std::string label;
    std::string filter;
    std::string threshold;
    std::optional<double> id_retention;
    std::optional<double> ood_leakage;
    std::optional<double> purity;
    std::optional<double> auroc;
    std::optional<double> f1;
    double teacher_accuracy = 0.0;
};

HistorySummary summarize_history_file(const std::string& path);
std::string render_report(std::span<const HistorySummary> rows);

}  // namespace cfb
