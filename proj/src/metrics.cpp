#include "cfb/metrics.hpp"

#include <algorithm>
#include <vector>

namespace cfb {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> FilterConfusion::precision() const { return ratio(tp, tp + fp); }
std::optional<double> FilterConfusion::recall() const { return ratio(tp, tp + fn); }

std::optional<double> FilterConfusion::f1() const {
    const auto p = precision();
    const auto r = recall();
    if (!p || !r) return std::nullopt;
    if (*p + *r == 0.0) return 0.0;
    return 2.0 * *p * *r / (*p + *r);
}

std::optional<double> FilterConfusion::id_retention() const { return ratio(tn, tn + fp); }
std::optional<double> FilterConfusion::ood_leakage() const { return ratio(fn, tp + fn); }

FilterConfusion filter_confusion(std::span<const FilterDecision> decisions,
                                 const std::unordered_map<std::string, GtFlag>& gt) {
    FilterConfusion c;
    for (const auto& d : decisions) {
        const auto it = gt.find(d.record_id);
        if (it == gt.end())
            throw JoinError("decision '" + d.record_id + "' has no ground-truth flag");
        switch (it->second) {
            case GtFlag::unknown: ++c.unknown; break;
            case GtFlag::ood: d.kept ? ++c.fn : ++c.tp; break;
            case GtFlag::id: d.kept ? ++c.tn : ++c.fp; break;
        }
    }
    return c;
}

double auroc(std::span<const std::pair<double, bool>> scored) {
    // Exact rank statistic: sort by score, walk tie groups, and accumulate for
    // each OOD sample the count of lower-scoring ID samples plus half the
    // same-score ID samples.
    std::vector<std::pair<double, bool>> sorted(scored.begin(), scored.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::uint64_t n_id = 0, n_ood = 0;
    double wins = 0.0;
    std::uint64_t id_below = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        std::uint64_t tie_id = 0, tie_ood = 0;
        while (j < sorted.size() && sorted[j].first == sorted[i].first) {
            sorted[j].second ? ++tie_ood : ++tie_id;
            ++j;
        }
        wins += static_cast<double>(tie_ood) *
                (static_cast<double>(id_below) + 0.5 * static_cast<double>(tie_id));
        id_below += tie_id;
        n_id += tie_id;
        n_ood += tie_ood;
        i = j;
    }
    if (n_id == 0 || n_ood == 0)
        throw SizeError("auroc needs at least one in-distribution and one OOD sample");
    return wins / (static_cast<double>(n_id) * static_cast<double>(n_ood));
}

std::optional<double> pseudo_purity(std::span<const FilterDecision> decisions,
                                    std::span<const PseudoPrediction> preds,
                                    const std::unordered_map<std::string, GroundTruth>& gt) {
    if (decisions.size() != preds.size())
        throw JoinError("decision and prediction sequences differ in length");
    std::uint64_t kept = 0, pure = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (decisions[i].record_id != preds[i].record_id)
            throw JoinError("decision '" + decisions[i].record_id +
                            "' does not match prediction '" + preds[i].record_id + "'");
        if (!decisions[i].kept) continue;
        const auto it = gt.find(decisions[i].record_id);
        if (it == gt.end())
            throw JoinError("decision '" + decisions[i].record_id + "' has no ground truth");
        if (it->second.flag == GtFlag::unknown) continue;
        ++kept;
        if (it->second.flag == GtFlag::id && it->second.gt_class == preds[i].pred_class) ++pure;
    }
    if (kept == 0) return std::nullopt;
    return static_cast<double>(pure) / static_cast<double>(kept);
}

}  // namespace cfb
