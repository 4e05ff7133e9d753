#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>

#include "cfb/pseudo_filter.hpp"

namespace cfb {

/// Filtering confusion counts with rejection-of-OOD as the positive class:
/// tp = OOD rejected, fp = ID rejected, tn = ID kept, fn = OOD kept.
/// Records with unknown ground truth are excluded and counted separately.
/// Rates with an empty denominator are reported as absent.
struct FilterConfusion {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;
    std::uint64_t unknown = 0;

    std::optional<double> precision() const;
    std::optional<double> recall() const;
    std::optional<double> f1() const;
    std::optional<double> id_retention() const;  // tn / (tn + fp)
    std::optional<double> ood_leakage() const;   // fn / (tp + fn)
};

/// Joins decisions with ground truth flags by record id.
/// JoinError when a decision has no matching flag.
FilterConfusion filter_confusion(std::span<const FilterDecision> decisions,
                                 const std::unordered_map<std::string, GtFlag>& gt);

/// Probability that a random OOD sample scores above a random ID sample,
/// ties counted one half (exact rank statistic, no binning). Input pairs are
/// (score, is_ood); SizeError unless both classes are present.
double auroc(std::span<const std::pair<double, bool>> scored);

/// Ground truth for purity: the flag plus, for ID records, the true class.
struct GroundTruth {
    GtFlag flag = GtFlag::unknown;
    int gt_class = -1;
};

/// Fraction of kept predictions that are ID and correctly classified.
/// Absent when nothing was kept. Decisions and predictions are matched
/// positionally and must agree on record ids; ground truth is joined by id.
std::optional<double> pseudo_purity(std::span<const FilterDecision> decisions,
                                    std::span<const PseudoPrediction> preds,
                                    const std::unordered_map<std::string, GroundTruth>& gt);

}  // namespace cfb
