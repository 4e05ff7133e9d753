#include "cfb/pseudo_filter.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "cfb/ood_score.hpp"

namespace cfb {

std::string_view reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::none: return "none";
        case RejectReason::low_confidence: return "low_confidence";
        case RejectReason::ood: return "ood";
        case RejectReason::cold_bank: return "cold_bank";
    }
    return "?";
}

namespace {

void validate_prediction(const PseudoPrediction& pred, const FeatureBankSet& banks) {
    if (!banks.has_class(pred.pred_class))
        throw ValidationError("prediction '" + pred.record_id + "' has undeclared class " +
                              std::to_string(pred.pred_class));
    if (!(pred.confidence >= 0.0 && pred.confidence <= 1.0))
        throw ValidationError("prediction '" + pred.record_id + "' confidence " +
                              std::to_string(pred.confidence) + " outside [0, 1]");
    validate_feature(pred.feature, banks.dim(), "prediction '" + pred.record_id + "' feature");
}

/// Runs fn(i) for i in [0, n), split across `workers` threads. The first
/// exception, if any, is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t w = std::min<std::size_t>(std::max(workers, 1), n == 0 ? 1 : n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex mu;
    std::exception_ptr first_error;
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = n * t / w;
        const std::size_t hi = n * (t + 1) / w;
        threads.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::vector<FilterDecision> filter_predictions(std::span<const PseudoPrediction> preds,
                                               const FeatureBankSet& banks, ThresholdEngine& engine,
                                               const FilterParams& params) {
    if (!(params.conf_tau >= 0.0 && params.conf_tau <= 1.0))
        throw ConfigError("confidence threshold must be in [0, 1]");
    for (const auto& pred : preds) validate_prediction(pred, banks);

    std::vector<FilterDecision> out(preds.size());
    const bool warm = banks.is_warm();

    if (!warm) {
        // Warm-up: the score gate is inactive, confidence passers go through.
        for (std::size_t i = 0; i < preds.size(); ++i) {
            FilterDecision& d = out[i];
            d.record_id = preds[i].record_id;
            d.warmup = true;
            if (preds[i].confidence < params.conf_tau) {
                d.kept = false;
                d.reason = RejectReason::low_confidence;
            } else {
                d.kept = true;
                d.reason = RejectReason::none;
            }
        }
        return out;
    }

    // Resolve every class threshold up front; the scoring pass is then pure.
    const bool adaptive = params.policy.kind == ThresholdPolicy::Kind::adaptive;
    std::optional<double> beta;
    std::map<int, double> taus;
    if (adaptive) {
        beta = params.policy.schedule.at(params.step);
        taus = engine.thresholds(banks, *beta);
    }

    parallel_for(preds.size(), params.workers, [&](std::size_t i) {
        const PseudoPrediction& pred = preds[i];
        FilterDecision& d = out[i];
        d.record_id = pred.record_id;
        if (pred.confidence < params.conf_tau) {
            d.kept = false;
            d.reason = RejectReason::low_confidence;
            return;
        }
        const double gamma =
            ood_score(pred.feature, banks.bank(pred.pred_class), params.k, params.metric);
        const double tau = adaptive ? taus.at(pred.pred_class) : params.policy.fixed_tau;
        d.ood_score = gamma;
        d.threshold_used = tau;
        d.beta = beta;
        if (gamma > tau) {
            d.kept = false;
            d.reason = RejectReason::ood;
        } else {
            d.kept = true;
            d.reason = RejectReason::none;
        }
    });
    return out;
}

namespace {

std::vector<double> softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

void check_logits(std::span<const double> logits) {
    if (logits.empty()) throw SizeError("scorer needs at least one logit");
    for (double l : logits) {
        if (!std::isfinite(l)) throw ValidationError("non-finite logit");
    }
}

}  // namespace

double msp_score(std::span<const double> logits) {
    check_logits(logits);
    const auto p = softmax(logits);
    return *std::max_element(p.begin(), p.end());
}

double entropy_score(std::span<const double> logits) {
    check_logits(logits);
    const auto p = softmax(logits);
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

double energy_score(std::span<const double> logits) {
    check_logits(logits);
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    return -(m + std::log(z));
}

BaselineScorer parse_baseline_scorer(std::string_view name) {
    if (name == "msp") return BaselineScorer::msp;
    if (name == "entropy") return BaselineScorer::entropy;
    if (name == "energy") return BaselineScorer::energy;
    throw ConfigError("unknown scorer '" + std::string(name) +
                      "', expected msp, entropy or energy");
}

std::string_view baseline_scorer_name(BaselineScorer s) {
    switch (s) {
        case BaselineScorer::msp: return "msp";
        case BaselineScorer::entropy: return "entropy";
        case BaselineScorer::energy: return "energy";
    }
    return "?";
}

FilterDecision baseline_decision(const PseudoPrediction& pred, BaselineScorer scorer,
                                 double cutoff) {
    if (!pred.logits)
        throw ValidationError("prediction '" + pred.record_id + "' carries no logits");
    double score = 0.0;
    bool keep = false;
    switch (scorer) {
        case BaselineScorer::msp:
            score = msp_score(*pred.logits);
            keep = score >= cutoff;
            break;
        case BaselineScorer::entropy:
            score = entropy_score(*pred.logits);
            keep = score <= cutoff;
            break;
        case BaselineScorer::energy:
            score = energy_score(*pred.logits);
            keep = score <= cutoff;
            break;
    }
    FilterDecision d;
    d.record_id = pred.record_id;
    d.kept = keep;
    d.reason = keep ? RejectReason::none : RejectReason::ood;
    d.ood_score = score;
    d.threshold_used = cutoff;
    return d;
}

std::vector<FilterDecision> baseline_filter(std::span<const PseudoPrediction> preds,
                                            BaselineScorer scorer, double cutoff) {
    std::vector<FilterDecision> out;
    out.reserve(preds.size());
    for (const auto& pred : preds) out.push_back(baseline_decision(pred, scorer, cutoff));
    return out;
}

}  // namespace cfb
