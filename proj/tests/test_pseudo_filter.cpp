#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "cfb/errors.hpp"
#include "cfb/pseudo_filter.hpp"
#include "cfb/rng.hpp"

using cfb::BaselineScorer;
using cfb::Feature;
using cfb::FeatureBankSet;
using cfb::FilterParams;
using cfb::GtFlag;
using cfb::Metric;
using cfb::PseudoPrediction;
using cfb::RejectReason;
using cfb::ThresholdEngine;
using cfb::ThresholdPolicy;

namespace {

PseudoPrediction pred(std::string id, Feature f, int cls, double conf) {
    PseudoPrediction p;
    p.record_id = std::move(id);
    p.feature = std::move(f);
    p.pred_class = cls;
    p.confidence = conf;
    return p;
}

// One class, three prototypes; adaptive stats give tau ~ 0.3610 at beta 1.
FeatureBankSet three_proto_bank() {
    FeatureBankSet set(1, 3, 2);
    set.push(0, Feature{1.0f, 0.0f});
    set.push(0, Feature{0.6f, 0.8f});
    set.push(0, Feature{0.0f, 1.0f});
    return set;
}

FilterParams adaptive_params(double beta) {
    FilterParams params;
    params.k = 1;
    params.policy = ThresholdPolicy::adaptive(cfb::BetaSchedule::fixed(beta));
    params.conf_tau = 0.7;
    return params;
}

}  // namespace

TEST_CASE("confidence gate runs first and skips scoring") {
    auto banks = three_proto_bank();
    ThresholdEngine engine(1, Metric::cosine);
    const auto decisions =
        cfb::filter_predictions({{pred("a", {1.0f, 0.0f}, 0, 0.3)}}, banks, engine,
                                adaptive_params(1.0));
    REQUIRE(decisions.size() == 1);
    CHECK_FALSE(decisions[0].kept);
    CHECK(decisions[0].reason == RejectReason::low_confidence);
    CHECK_FALSE(decisions[0].ood_score.has_value());
    CHECK_FALSE(decisions[0].threshold_used.has_value());
}

TEST_CASE("zero score passes any positive cutoff") {
    FeatureBankSet banks(1, 2, 2);
    banks.push(0, Feature{1.0f, 1.0f});
    banks.push(0, Feature{1.0f, 1.0f});
    ThresholdEngine engine(1, Metric::cosine);
    FilterParams params;
    params.k = 1;
    params.policy = ThresholdPolicy::fixed(0.25);
    const auto decisions =
        cfb::filter_predictions({{pred("a", {2.0f, 2.0f}, 0, 0.99)}}, banks, engine, params);
    CHECK(decisions[0].kept);
    CHECK(decisions[0].ood_score.value() == doctest::Approx(0.0));
    CHECK(decisions[0].threshold_used.value() == 0.25);
}

TEST_CASE("adaptive gate keeps near and rejects far queries") {
    auto banks = three_proto_bank();
    ThresholdEngine engine(1, Metric::cosine);
    const std::vector<PseudoPrediction> preds{
        pred("near", {0.8f, 0.6f}, 0, 0.9),   // gamma 0.04 vs tau 0.361
        pred("far", {-1.0f, 0.0f}, 0, 0.9),   // gamma 1.0
    };
    const auto decisions = cfb::filter_predictions(preds, banks, engine, adaptive_params(1.0));
    REQUIRE(decisions.size() == 2);

    CHECK(decisions[0].kept);
    CHECK(decisions[0].ood_score.value() == doctest::Approx(0.04).epsilon(1e-6));
    CHECK(decisions[0].threshold_used.value() == doctest::Approx(0.3610).epsilon(1e-3));
    CHECK(decisions[0].beta.value() == 1.0);

    CHECK_FALSE(decisions[1].kept);
    CHECK(decisions[1].reason == RejectReason::ood);
    CHECK(decisions[1].ood_score.value() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("score equal to the cutoff keeps") {
    FeatureBankSet banks(1, 2, 2);
    banks.push(0, Feature{1.0f, 0.0f});
    banks.push(0, Feature{1.0f, 0.0f});
    ThresholdEngine engine(1, Metric::cosine);
    FilterParams params;
    params.k = 1;
    params.policy = ThresholdPolicy::fixed(1.0);
    // Orthogonal query scores exactly 1.0.
    const auto decisions =
        cfb::filter_predictions({{pred("edge", {0.0f, 1.0f}, 0, 0.9)}}, banks, engine, params);
    CHECK(decisions[0].kept);
}

TEST_CASE("undeclared class is rejected up front") {
    auto banks = three_proto_bank();
    ThresholdEngine engine(1, Metric::cosine);
    CHECK_THROWS_AS(cfb::filter_predictions({{pred("a", {1.0f, 0.0f}, 3, 0.9)}}, banks, engine,
                                            adaptive_params(1.0)),
                    cfb::ValidationError);
    CHECK_THROWS_AS(cfb::filter_predictions({{pred("a", {1.0f, 0.0f}, 0, 1.5)}}, banks, engine,
                                            adaptive_params(1.0)),
                    cfb::ValidationError);
}

TEST_CASE("cold banks bypass the score gate") {
    FeatureBankSet banks(2, 3, 2);
    banks.push(0, Feature{1.0f, 0.0f});  // class 1 stays empty
    ThresholdEngine engine(1, Metric::cosine);
    const std::vector<PseudoPrediction> preds{
        pred("a", {1.0f, 0.0f}, 0, 0.9),
        pred("b", {-1.0f, 0.0f}, 0, 0.9),  // would be rejected if gated
        pred("c", {1.0f, 0.0f}, 0, 0.1),
    };

    for (auto policy : {ThresholdPolicy::adaptive(cfb::BetaSchedule::fixed(1.0)),
                        ThresholdPolicy::fixed(0.5)}) {
        FilterParams params;
        params.k = 1;
        params.policy = policy;
        const auto decisions = cfb::filter_predictions(preds, banks, engine, params);
        REQUIRE(decisions.size() == 3);
        CHECK(decisions[0].kept);
        CHECK(decisions[0].warmup);
        CHECK_FALSE(decisions[0].ood_score.has_value());
        CHECK(decisions[1].kept);  // no scoring while cold
        CHECK(decisions[1].warmup);
        CHECK_FALSE(decisions[2].kept);  // confidence gate still applies
        CHECK(decisions[2].reason == RejectReason::low_confidence);
        CHECK(decisions[2].warmup);
    }
}

TEST_CASE("softmax scorers match hand arithmetic") {
    SUBCASE("max softmax probability") {
        const std::vector<double> logits{2.0, 1.0, 0.0};
        const double e2 = std::exp(2.0), e1 = std::exp(1.0), e0 = 1.0;
        CHECK(cfb::msp_score(logits) == doctest::Approx(e2 / (e2 + e1 + e0)));
        CHECK(cfb::msp_score(logits) == doctest::Approx(0.6652).epsilon(1e-4));
        CHECK(cfb::msp_score({{1.0, 1.0, 1.0, 1.0}}) == doctest::Approx(0.25));
        CHECK(cfb::msp_score({{100.0, 0.0, 0.0}}) == doctest::Approx(1.0));
        CHECK_THROWS_AS(cfb::msp_score({}), cfb::SizeError);
    }
    SUBCASE("entropy in nats") {
        CHECK(cfb::entropy_score({{5.0, 5.0, 5.0}}) == doctest::Approx(std::log(3.0)));
        CHECK(cfb::entropy_score({{100.0, 0.0, 0.0}}) == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(cfb::entropy_score({{1.0, 1.0, 0.0}}) == doctest::Approx(1.0173).epsilon(1e-4));
        CHECK_THROWS_AS(cfb::entropy_score({}), cfb::SizeError);
    }
    SUBCASE("negative log-sum-exp energy") {
        CHECK(cfb::energy_score({{0.0, 0.0}}) == doctest::Approx(-std::log(2.0)));
        CHECK(cfb::energy_score({{3.5}}) == doctest::Approx(-3.5));
        // Max-shifted, so huge logits do not overflow.
        CHECK(cfb::energy_score({{1000.0, 1000.0}}) ==
              doctest::Approx(-1000.0 - std::log(2.0)));
        const double inf = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(cfb::energy_score({{1.0, inf}}), cfb::ValidationError);
    }
}

namespace {

PseudoPrediction with_logits(std::string id, std::vector<double> logits, double conf = 0.9) {
    auto p = pred(std::move(id), {1.0f, 0.0f}, 0, conf);
    p.logits = std::move(logits);
    return p;
}

}  // namespace

TEST_CASE("baseline filters follow their polarity") {
    SUBCASE("msp keeps high scores") {
        const auto d = cfb::baseline_filter({{with_logits("a", {2.0, 1.0, 0.0})}},
                                            BaselineScorer::msp, 0.9);
        CHECK_FALSE(d[0].kept);  // 0.6652 < 0.9
        CHECK(d[0].reason == RejectReason::ood);
        CHECK(d[0].ood_score.value() == doctest::Approx(0.6652).epsilon(1e-4));
        CHECK(d[0].threshold_used.value() == 0.9);
    }
    SUBCASE("entropy cutoff at the maximum keeps everything") {
        const auto d = cfb::baseline_filter(
            {{with_logits("a", {9.0, -3.0, 0.4}), with_logits("b", {0.0, 0.0, 0.0})}},
            BaselineScorer::entropy, std::log(3.0));
        CHECK(d[0].kept);
        CHECK(d[1].kept);  // uniform hits the bound exactly; inclusive keep
    }
    SUBCASE("energy boundary keeps") {
        const auto d = cfb::baseline_filter({{with_logits("a", {0.0, 0.0})}},
                                            BaselineScorer::energy, -std::log(2.0));
        CHECK(d[0].kept);
    }
    SUBCASE("missing logits is a validation error") {
        CHECK_THROWS_AS(cfb::baseline_filter({{pred("a", {1.0f, 0.0f}, 0, 0.9)}},
                                             BaselineScorer::msp, 0.5),
                        cfb::ValidationError);
    }
}

TEST_CASE("infinite cutoffs keep or reject everything") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<PseudoPrediction> preds;
    cfb::Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> logits{rng.gaussian(), rng.gaussian(), rng.gaussian()};
        preds.push_back(with_logits("p" + std::to_string(i), std::move(logits)));
    }
    struct Case {
        BaselineScorer scorer;
        double keep_all, reject_all;
    };
    // msp keeps >= cutoff, the others keep <= cutoff.
    for (const auto& c : {Case{BaselineScorer::msp, -inf, inf},
                          Case{BaselineScorer::entropy, inf, -inf},
                          Case{BaselineScorer::energy, inf, -inf}}) {
        for (const auto& d : cfb::baseline_filter(preds, c.scorer, c.keep_all)) CHECK(d.kept);
        for (const auto& d : cfb::baseline_filter(preds, c.scorer, c.reject_all))
            CHECK_FALSE(d.kept);
    }
}

TEST_CASE("ground truth flags never change decisions") {
    auto banks = three_proto_bank();
    ThresholdEngine engine(1, Metric::cosine);
    cfb::Rng rng(5);
    std::vector<PseudoPrediction> preds;
    for (int i = 0; i < 50; ++i) {
        auto p = pred("p" + std::to_string(i),
                      {float(rng.gaussian()), float(rng.gaussian() + 0.1)}, 0, rng.uniform());
        if (p.feature[0] == 0.0f && p.feature[1] == 0.0f) p.feature[0] = 1.0f;
        p.gt_ood = GtFlag::id;
        preds.push_back(std::move(p));
    }
    const auto before = cfb::filter_predictions(preds, banks, engine, adaptive_params(1.5));

    for (auto& p : preds)
        p.gt_ood = (p.record_id.size() % 2) ? GtFlag::ood : GtFlag::unknown;
    const auto after = cfb::filter_predictions(preds, banks, engine, adaptive_params(1.5));
    CHECK(before == after);
}

TEST_CASE("worker count does not affect decisions") {
    FeatureBankSet banks(3, 8, 4);
    cfb::Rng rng(9);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 8; ++i)
            banks.push(c, Feature{float(rng.gaussian() + c), float(rng.gaussian()),
                                  float(rng.gaussian()), 1.0f});
    std::vector<PseudoPrediction> preds;
    for (int i = 0; i < 137; ++i)
        preds.push_back(pred("p" + std::to_string(i),
                             {float(rng.gaussian()), float(rng.gaussian()),
                              float(rng.gaussian()), 1.0f},
                             int(rng.uniform_int(3)), rng.uniform()));

    ThresholdEngine engine(2, Metric::cosine);
    auto params = adaptive_params(1.0);
    params.k = 2;
    params.workers = 1;
    const auto serial = cfb::filter_predictions(preds, banks, engine, params);
    for (int workers : {2, 3, 8, 64}) {
        params.workers = workers;
        ThresholdEngine fresh(2, Metric::cosine);
        const auto parallel = cfb::filter_predictions(preds, banks, fresh, params);
        REQUIRE(serial == parallel);
    }
}

TEST_CASE("reason names") {
    CHECK(cfb::reject_reason_name(RejectReason::none) == "none");
    CHECK(cfb::reject_reason_name(RejectReason::low_confidence) == "low_confidence");
    CHECK(cfb::reject_reason_name(RejectReason::ood) == "ood");
    CHECK(cfb::parse_baseline_scorer("energy") == BaselineScorer::energy);
    CHECK_THROWS_AS(cfb::parse_baseline_scorer("softmax"), cfb::ConfigError);
}
