#include <doctest.h>

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfb/errors.hpp"
#include "cfb/metrics.hpp"

using cfb::FilterDecision;
using cfb::GroundTruth;
using cfb::GtFlag;
using cfb::PseudoPrediction;

namespace {

FilterDecision decision(std::string id, bool kept) {
    FilterDecision d;
    d.record_id = std::move(id);
    d.kept = kept;
    d.reason = kept ? cfb::RejectReason::none : cfb::RejectReason::ood;
    return d;
}

}  // namespace

TEST_CASE("confusion counting") {
    SUBCASE("all ood rejected") {
        std::vector<FilterDecision> ds{decision("a", false), decision("b", false)};
        std::unordered_map<std::string, GtFlag> gt{{"a", GtFlag::ood}, {"b", GtFlag::ood}};
        const auto c = cfb::filter_confusion(ds, gt);
        CHECK(c.tp == 2);
        CHECK(c.precision().value() == 1.0);
        CHECK(c.recall().value() == 1.0);
        CHECK_FALSE(c.id_retention().has_value());  // no ID records at all
    }
    SUBCASE("all id kept") {
        std::vector<FilterDecision> ds{decision("a", true), decision("b", true)};
        std::unordered_map<std::string, GtFlag> gt{{"a", GtFlag::id}, {"b", GtFlag::id}};
        const auto c = cfb::filter_confusion(ds, gt);
        CHECK(c.id_retention().value() == 1.0);
        CHECK_FALSE(c.precision().has_value());
        CHECK_FALSE(c.ood_leakage().has_value());
    }
    SUBCASE("mixed outcome") {
        std::vector<FilterDecision> ds{
            decision("o1", false), decision("o2", false), decision("o3", true),
            decision("i1", true),  decision("i2", true),  decision("i3", true),
            decision("i4", false),
        };
        std::unordered_map<std::string, GtFlag> gt{
            {"o1", GtFlag::ood}, {"o2", GtFlag::ood}, {"o3", GtFlag::ood},
            {"i1", GtFlag::id},  {"i2", GtFlag::id},  {"i3", GtFlag::id},
            {"i4", GtFlag::id},
        };
        const auto c = cfb::filter_confusion(ds, gt);
        CHECK(c.tp == 2);
        CHECK(c.fp == 1);
        CHECK(c.tn == 3);
        CHECK(c.fn == 1);
        CHECK(c.precision().value() == doctest::Approx(2.0 / 3.0));
        CHECK(c.recall().value() == doctest::Approx(2.0 / 3.0));
        CHECK(c.id_retention().value() == doctest::Approx(3.0 / 4.0));
        CHECK(c.ood_leakage().value() == doctest::Approx(1.0 / 3.0));
        CHECK(c.f1().value() == doctest::Approx(2.0 / 3.0));
        CHECK(c.tp + c.fp + c.tn + c.fn == 7);  // every known record lands in one cell
    }
    SUBCASE("unknown flags are excluded but counted") {
        std::vector<FilterDecision> ds{decision("a", true), decision("b", false)};
        std::unordered_map<std::string, GtFlag> gt{{"a", GtFlag::unknown},
                                                   {"b", GtFlag::ood}};
        const auto c = cfb::filter_confusion(ds, gt);
        CHECK(c.unknown == 1);
        CHECK(c.tp == 1);
        CHECK(c.tn + c.fp + c.fn == 0);
    }
    SUBCASE("missing id is a join error") {
        std::vector<FilterDecision> ds{decision("a", true)};
        std::unordered_map<std::string, GtFlag> gt{{"zzz", GtFlag::id}};
        CHECK_THROWS_AS(cfb::filter_confusion(ds, gt), cfb::JoinError);
    }
}

TEST_CASE("rank statistic separation score") {
    using P = std::pair<double, bool>;
    SUBCASE("perfect separation") {
        const std::vector<P> scored{{0.0, false}, {0.0, false}, {1.0, true}, {1.0, true}};
        CHECK(cfb::auroc(scored) == 1.0);
    }
    SUBCASE("all tied is chance level") {
        const std::vector<P> scored{{0.5, false}, {0.5, true}, {0.5, false}, {0.5, true}};
        CHECK(cfb::auroc(scored) == 0.5);
    }
    SUBCASE("interleaved pairs") {
        const std::vector<P> scored{{0.1, false}, {0.3, false}, {0.2, true}, {0.4, true}};
        CHECK(cfb::auroc(scored) == doctest::Approx(0.75));
    }
    SUBCASE("inverted scores give zero") {
        const std::vector<P> scored{{1.0, false}, {0.0, true}};
        CHECK(cfb::auroc(scored) == 0.0);
    }
    SUBCASE("single class rejected") {
        CHECK_THROWS_AS(cfb::auroc(std::vector<P>{{0.1, false}, {0.2, false}}),
                        cfb::SizeError);
        CHECK_THROWS_AS(cfb::auroc(std::vector<P>{}), cfb::SizeError);
    }
    SUBCASE("invariant under monotone transforms") {
        std::vector<P> scored;
        const double values[] = {0.13, 0.55, 0.21, 0.92, 0.38, 0.70, 0.05, 0.64};
        for (int i = 0; i < 8; ++i) scored.push_back({values[i], i % 2 == 0});
        const double base = cfb::auroc(scored);
        for (auto& [s, flag] : scored) s = std::exp(3.0 * s) - 7.0;
        CHECK(cfb::auroc(scored) == doctest::Approx(base));
    }
}

namespace {

PseudoPrediction pp(std::string id, int cls) {
    PseudoPrediction p;
    p.record_id = std::move(id);
    p.pred_class = cls;
    return p;
}

}  // namespace

TEST_CASE("purity of the kept set") {
    std::unordered_map<std::string, GroundTruth> gt{
        {"a", {GtFlag::id, 0}}, {"b", {GtFlag::id, 1}}, {"c", {GtFlag::id, 2}},
        {"d", {GtFlag::id, 0}}, {"e", {GtFlag::ood, -1}},
    };

    SUBCASE("all kept correct") {
        std::vector<FilterDecision> ds{decision("a", true), decision("b", true)};
        std::vector<PseudoPrediction> preds{pp("a", 0), pp("b", 1)};
        CHECK(cfb::pseudo_purity(ds, preds, gt).value() == 1.0);
    }
    SUBCASE("all kept are ood") {
        std::vector<FilterDecision> ds{decision("e", true)};
        std::vector<PseudoPrediction> preds{pp("e", 2)};
        CHECK(cfb::pseudo_purity(ds, preds, gt).value() == 0.0);
    }
    SUBCASE("mixed kept set") {
        // three correct, one misclassified, one ood
        std::vector<FilterDecision> ds{decision("a", true), decision("b", true),
                                       decision("c", true), decision("d", true),
                                       decision("e", true)};
        std::vector<PseudoPrediction> preds{pp("a", 0), pp("b", 1), pp("c", 2), pp("d", 1),
                                            pp("e", 0)};
        CHECK(cfb::pseudo_purity(ds, preds, gt).value() == doctest::Approx(0.6));
    }
    SUBCASE("rejected records do not count") {
        std::vector<FilterDecision> ds{decision("a", true), decision("e", false)};
        std::vector<PseudoPrediction> preds{pp("a", 0), pp("e", 0)};
        CHECK(cfb::pseudo_purity(ds, preds, gt).value() == 1.0);
    }
    SUBCASE("empty kept set is absent") {
        std::vector<FilterDecision> ds{decision("a", false)};
        std::vector<PseudoPrediction> preds{pp("a", 0)};
        CHECK_FALSE(cfb::pseudo_purity(ds, preds, gt).has_value());
    }
    SUBCASE("id mismatch is a join error") {
        std::vector<FilterDecision> ds{decision("a", true)};
        std::vector<PseudoPrediction> preds{pp("b", 0)};
        CHECK_THROWS_AS(cfb::pseudo_purity(ds, preds, gt), cfb::JoinError);
        std::vector<PseudoPrediction> missing{pp("a", 0)};
        std::unordered_map<std::string, GroundTruth> empty;
        CHECK_THROWS_AS(cfb::pseudo_purity(ds, missing, empty), cfb::JoinError);
    }
}
