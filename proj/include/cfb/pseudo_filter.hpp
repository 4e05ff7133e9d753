#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfb/feature.hpp"
#include "cfb/feature_bank.hpp"
#include "cfb/threshold.hpp"

namespace cfb {

/// Evaluation-only ground truth flag. Never consulted by any gate.
enum class GtFlag : int { id = 0, ood = 1, unknown = -1 };

/// Candidate pseudo-label produced by a teacher model.
struct PseudoPrediction {
    std::string record_id;
    Feature feature;
    int pred_class = -1;
    double confidence = 0.0;
    std::optional<std::vector<double>> logits;  // length C, baselines only
    GtFlag gt_ood = GtFlag::unknown;
};

enum class RejectReason { none, low_confidence, ood, cold_bank };

std::string_view reject_reason_name(RejectReason r);

/// Auditable outcome for one prediction. `ood_score` and `threshold_used`
/// are absent whenever the gate that produces them did not run.
struct FilterDecision {
    std::string record_id;
    bool kept = false;
    RejectReason reason = RejectReason::none;
    std::optional<double> ood_score;
    std::optional<double> threshold_used;
    std::optional<double> beta;
    bool warmup = false;

    bool operator==(const FilterDecision&) const = default;
};

struct FilterParams {
    std::size_t k = 1;
    Metric metric = Metric::cosine;
    ThresholdPolicy policy = ThresholdPolicy::fixed(0.5);
    double conf_tau = 0.7;     // confidence gate, checked first
    std::uint64_t step = 0;    // schedule position for adaptive policies
    int workers = 1;           // >1 partitions the scoring pass across threads
};

/// Two-stage gate over a batch of predictions, in input order:
///   1. confidence < conf_tau        -> reject low_confidence (no score computed)
///   2. score > threshold of ĉ       -> reject ood, else keep (equality keeps)
/// While any bank is below capacity the score gate is bypassed entirely:
/// confidence passers are kept with `warmup = true`.
///
/// Output is deterministic and identical for any worker count.
std::vector<FilterDecision> filter_predictions(std::span<const PseudoPrediction> preds,
                                               const FeatureBankSet& banks, ThresholdEngine& engine,
                                               const FilterParams& params);

// Baseline scorers over raw class logits.

/// Max softmax probability, in (0, 1]. Higher = more in-distribution.
double msp_score(std::span<const double> logits);
/// Shannon entropy of the softmax, in nats. Higher = more out-of-distribution.
double entropy_score(std::span<const double> logits);
/// -logsumexp(logits), max-shifted. Higher = more out-of-distribution.
double energy_score(std::span<const double> logits);

enum class BaselineScorer { msp, entropy, energy };

BaselineScorer parse_baseline_scorer(std::string_view name);
std::string_view baseline_scorer_name(BaselineScorer s);

/// Single record under a logit scorer; score and cutoff land in the
/// ood_score / threshold_used fields.
FilterDecision baseline_decision(const PseudoPrediction& pred, BaselineScorer scorer,
                                 double cutoff);

/// Single-stage gate using one of the logit scorers. msp keeps score >= cutoff;
/// entropy and energy keep score <= cutoff. Requires logits on every record.
std::vector<FilterDecision> baseline_filter(std::span<const PseudoPrediction> preds,
                                            BaselineScorer scorer, double cutoff);

}  // namespace cfb
