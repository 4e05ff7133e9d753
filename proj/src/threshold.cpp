#include "cfb/threshold.hpp"

#include <cmath>
#include <string>

namespace cfb {

ClassStats class_stats(std::span<const double> scores) {
    if (scores.empty()) throw SizeError("class statistics need at least one score");
    double sum = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s)) throw ValidationError("non-finite score in class statistics");
        sum += s;
    }
    const double n = static_cast<double>(scores.size());
    const double mu = sum / n;
    double sq = 0.0;
    for (double s : scores) sq += (s - mu) * (s - mu);
    ClassStats stats;
    stats.mu = mu;
    stats.sigma = std::sqrt(sq / n);
    stats.count = scores.size();
    return stats;
}

double threshold(const ClassStats& stats, double beta) { return stats.mu + beta * stats.sigma; }

BetaSchedule BetaSchedule::fixed(double beta) {
    BetaSchedule s;
    s.fixed_ = true;
    s.beta_init_ = beta;
    s.beta_final_ = beta;
    return s;
}

BetaSchedule BetaSchedule::linear(double beta_init, double beta_final, std::uint64_t total_steps) {
    if (total_steps == 0) throw ConfigError("linear beta schedule needs total_steps >= 1");
    BetaSchedule s;
    s.fixed_ = false;
    s.beta_init_ = beta_init;
    s.beta_final_ = beta_final;
    s.total_steps_ = total_steps;
    return s;
}

double BetaSchedule::at(std::uint64_t step) const {
    if (fixed_) return beta_init_;
    if (step > total_steps_)
        throw RangeError("schedule step " + std::to_string(step) + " past total " +
                         std::to_string(total_steps_));
    if (step == 0) return beta_init_;
    if (step == total_steps_) return beta_final_;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps_);
    return beta_init_ + (beta_final_ - beta_init_) * t;
}

ThresholdPolicy ThresholdPolicy::adaptive(BetaSchedule schedule) {
    ThresholdPolicy p;
    p.kind = Kind::adaptive;
    p.schedule = schedule;
    return p;
}

ThresholdPolicy ThresholdPolicy::fixed(double tau) {
    ThresholdPolicy p;
    p.kind = Kind::fixed;
    p.fixed_tau = tau;
    return p;
}

ThresholdEngine::ThresholdEngine(std::size_t k, Metric metric) : k_(k), metric_(metric) {
    if (k == 0) throw ConfigError("threshold engine needs k >= 1");
}

const ClassStats& ThresholdEngine::stats_for(const FeatureBankSet& banks, int class_id) {
    const ClassFeatureBank& bank = banks.bank(class_id);
    if (!bank.full())
        throw WarmupError("class " + std::to_string(class_id) + " bank holds " +
                          std::to_string(bank.size()) + " of " + std::to_string(bank.capacity()) +
                          " prototypes");
    CacheEntry& entry = cache_[class_id];
    if (entry.push_count != bank.push_count() || entry.stats.count == 0) {
        const auto scores = prototype_scores(bank, k_, metric_);
        entry.stats = class_stats(scores);
        entry.stats.class_id = class_id;
        entry.push_count = bank.push_count();
    }
    return entry.stats;
}

std::map<int, double> ThresholdEngine::thresholds(const FeatureBankSet& banks, double beta) {
    std::map<int, double> out;
    for (int c = 0; c < banks.num_classes(); ++c) {
        out[c] = threshold(stats_for(banks, c), beta);
    }
    return out;
}

}  // namespace cfb
