#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>

#include "cfb/feature_bank.hpp"
#include "cfb/ood_score.hpp"

namespace cfb {

/// First two moments of a class's prototype self-scores. Sigma is the
/// population standard deviation (1/N form).
struct ClassStats {
    int class_id = -1;
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t count = 0;
};

/// Moments of a nonempty, finite score sequence.
ClassStats class_stats(std::span<const double> scores);

/// Cut-off value mu + beta * sigma.
double threshold(const ClassStats& stats, double beta);

/// Multiplier schedule over training progress. Linear mode ramps from
/// beta_init at step 0 to beta_final at step T; both endpoints are returned
/// exactly. Fixed mode ignores the step.
class BetaSchedule {
public:
    static BetaSchedule fixed(double beta);
    static BetaSchedule linear(double beta_init, double beta_final, std::uint64_t total_steps);

    double at(std::uint64_t step) const;  // RangeError when step > T in linear mode

    bool is_fixed() const { return fixed_; }
    double beta_init() const { return beta_init_; }
    double beta_final() const { return beta_final_; }
    std::uint64_t total_steps() const { return total_steps_; }

private:
    BetaSchedule() = default;
    bool fixed_ = true;
    double beta_init_ = 0.0;
    double beta_final_ = 0.0;
    std::uint64_t total_steps_ = 0;
};

struct ThresholdPolicy {
    enum class Kind { adaptive, fixed };

    Kind kind = Kind::adaptive;
    BetaSchedule schedule = BetaSchedule::linear(1.0, 2.0, 1);
    double fixed_tau = 0.5;

    static ThresholdPolicy adaptive(BetaSchedule schedule);
    static ThresholdPolicy fixed(double tau);
};

/// Per-class threshold computation with a statistics cache keyed on each
/// bank's push counter, so unchanged banks are not rescanned. A single
/// writer owns the engine; results for a given bank state are deterministic.
class ThresholdEngine {
public:
    ThresholdEngine(std::size_t k, Metric metric);

    std::size_t k() const { return k_; }
    Metric metric() const { return metric_; }

    /// Moments of the class's current prototypes. Recomputed only when the
    /// bank changed since the last call. WarmupError if the bank is not full.
    const ClassStats& stats_for(const FeatureBankSet& banks, int class_id);

    /// tau_c = mu_c + beta * sigma_c for every declared class.
    /// WarmupError naming the first cold class if any bank is below capacity.
    std::map<int, double> thresholds(const FeatureBankSet& banks, double beta);

private:
    std::size_t k_;
    Metric metric_;
    struct CacheEntry {
        std::uint64_t push_count = 0;
        ClassStats stats;
    };
    std::unordered_map<int, CacheEntry> cache_;
};

}  // namespace cfb
