#include <doctest.h>

#include <cmath>
#include <vector>

#include "cfb/errors.hpp"
#include "cfb/sim.hpp"

using cfb::Feature;
using cfb::GtFlag;
using cfb::Prediction;
using cfb::SimState;
using cfb::StreamConfig;
using cfb::StreamRecord;
using cfb::StreamSampler;
using cfb::SurrogateDetector;

namespace {

StreamConfig small_config() {
    StreamConfig c;
    c.num_id_classes = 3;
    c.num_ood_classes = 1;
    c.dim = 8;
    c.separation = 6.0;
    c.seed = 99;
    return c;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("clean streams have no ood records") {
    auto config = small_config();
    config.contamination = 0.0;
    config.labeled_count = 50;
    config.unlabeled_count = 200;
    const auto records = cfb::gen_stream(config);
    REQUIRE(records.size() == 250);
    for (const auto& r : records) {
        if (r.labeled) {
            CHECK(r.gt_class >= 0);
            CHECK(r.gt_ood == GtFlag::id);
        } else {
            CHECK(r.gt_ood == GtFlag::id);
        }
    }
}

TEST_CASE("contamination fraction is honored at scale") {
    auto config = small_config();
    config.num_id_classes = 10;
    config.num_ood_classes = 3;
    config.contamination = 0.632;
    config.labeled_count = 0;
    config.unlabeled_count = 20000;
    config.dim = 16;
    const auto records = cfb::gen_stream(config);
    std::size_t ood = 0;
    for (const auto& r : records)
        if (r.gt_ood == GtFlag::ood) ++ood;
    const double fraction = double(ood) / double(records.size());
    CHECK(fraction == doctest::Approx(0.632).epsilon(0.01));
}

TEST_CASE("identical configs give identical streams") {
    const auto config = small_config();
    const auto a = cfb::gen_stream(config);
    const auto b = cfb::gen_stream(config);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].record_id == b[i].record_id);
        CHECK(a[i].feature == b[i].feature);
        CHECK(a[i].gt_class == b[i].gt_class);
    }
}

TEST_CASE("seed changes the stream, separation does not move directions") {
    auto config = small_config();
    const auto a = cfb::gen_stream(config);
    config.seed = 100;
    const auto b = cfb::gen_stream(config);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size() && !any_diff; ++i)
        any_diff = a[i].feature != b[i].feature;
    CHECK(any_diff);
}

TEST_CASE("impossible geometry is rejected") {
    StreamConfig config;
    config.num_id_classes = 40;  // far more than 60-degree spacing allows in 2-D
    config.num_ood_classes = 0;
    config.dim = 2;
    config.seed = 1;
    CHECK_THROWS_AS(StreamSampler{config}, cfb::ConfigError);
}

TEST_CASE("sampler validates config ranges") {
    auto config = small_config();
    config.contamination = 1.5;
    CHECK_THROWS_AS(StreamSampler{config}, cfb::ConfigError);
    config = small_config();
    config.separation = 0.0;
    CHECK_THROWS_AS(StreamSampler{config}, cfb::ConfigError);
    config = small_config();
    config.contamination = 0.5;
    config.num_ood_classes = 0;
    CHECK_THROWS_AS(StreamSampler{config}, cfb::ConfigError);
}

TEST_CASE("drift is a rigid motion of the centroids") {
    auto config = small_config();
    config.num_id_classes = 4;
    config.drift_rate = 0.8;
    StreamSampler sampler(config);
    const auto before = sampler.id_centroids();
    sampler.advance_epoch();
    sampler.advance_epoch();
    const auto after = sampler.id_centroids();

    bool moved = false;
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (dist(before[i], after[i]) > 1e-9) moved = true;
        for (std::size_t j = i + 1; j < before.size(); ++j)
            CHECK(dist(after[i], after[j]) ==
                  doctest::Approx(dist(before[i], before[j])).epsilon(1e-9));
        // Norms are preserved too (rotation about the origin).
        double n0 = 0.0, n1 = 0.0;
        for (double x : before[i]) n0 += x * x;
        for (double x : after[i]) n1 += x * x;
        CHECK(std::sqrt(n1) == doctest::Approx(std::sqrt(n0)).epsilon(1e-9));
    }
    CHECK(moved);
}

TEST_CASE("nearest centroid prediction") {
    SurrogateDetector det;
    det.centroids = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
    det.temperature = 0.1;

    SUBCASE("feature at a centroid") {
        const auto p = cfb::predict(det, Feature{0.0f, 10.0f});
        CHECK(p.pred_class == 2);
        CHECK(p.confidence > 0.99);
        REQUIRE(p.logits.size() == 3);
        CHECK(p.logits[2] == doctest::Approx(0.0));
    }
    SUBCASE("equidistant features split confidence and tie-break low") {
        SurrogateDetector pair;
        pair.centroids = {{-1.0, 0.0}, {1.0, 0.0}};
        pair.temperature = 0.1;
        const auto p = cfb::predict(pair, Feature{0.0f, 5.0f});
        CHECK(p.pred_class == 0);
        CHECK(p.confidence == doctest::Approx(0.5));
    }
    SUBCASE("zero temperature flattens confidence") {
        SurrogateDetector flat = det;
        flat.temperature = 0.0;
        const auto p = cfb::predict(flat, Feature{7.0f, -3.0f});
        CHECK(p.confidence == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(cfb::predict(det, Feature{1.0f}), cfb::ValidationError);
        SurrogateDetector empty;
        CHECK_THROWS_AS(cfb::predict(empty, Feature{1.0f}), cfb::SizeError);
    }
}

namespace {

StreamRecord labeled_point(int cls, std::initializer_list<float> v) {
    StreamRecord r;
    r.record_id = "l";
    r.feature = Feature(v);
    r.labeled = true;
    r.gt_class = cls;
    r.gt_ood = GtFlag::id;
    return r;
}

cfb::PseudoPrediction pseudo_point(int cls, std::initializer_list<float> v) {
    cfb::PseudoPrediction p;
    p.record_id = "p";
    p.feature = Feature(v);
    p.pred_class = cls;
    p.confidence = 1.0;
    return p;
}

}  // namespace

TEST_CASE("student centroid updates") {
    SUBCASE("full supervised step lands on the sample") {
        SurrogateDetector student;
        student.centroids = {{5.0, 5.0}};
        cfb::student_update(student, {{labeled_point(0, {1.0f, 2.0f})}}, {}, 1.0, 0.0);
        CHECK(student.centroids[0][0] == doctest::Approx(1.0));
        CHECK(student.centroids[0][1] == doctest::Approx(2.0));
    }
    SUBCASE("empty batches are a no-op") {
        SurrogateDetector student;
        student.centroids = {{3.0, -4.0}, {0.5, 0.5}};
        const auto before = student.centroids;
        cfb::student_update(student, {}, {}, 0.5, 1.0);
        CHECK(student.centroids == before);
    }
    SUBCASE("labeled and pseudo means combine") {
        SurrogateDetector student;
        student.centroids = {{0.0, 0.0}};
        // labeled mean (2, 0), pseudo mean (0, 4); lr 0.5, weight 1:
        // delta = 0.5*(2,0) + 0.5*(0,4) = (1, 2)
        cfb::student_update(student,
                            {{labeled_point(0, {1.0f, 0.0f}), labeled_point(0, {3.0f, 0.0f})}},
                            {{pseudo_point(0, {0.0f, 4.0f})}}, 0.5, 1.0);
        CHECK(student.centroids[0][0] == doctest::Approx(1.0));
        CHECK(student.centroids[0][1] == doctest::Approx(2.0));
    }
    SUBCASE("classes absent from both batches stay put") {
        SurrogateDetector student;
        student.centroids = {{1.0, 1.0}, {9.0, 9.0}};
        cfb::student_update(student, {{labeled_point(0, {2.0f, 2.0f})}}, {}, 0.5, 1.0);
        CHECK(student.centroids[1] == std::vector<double>{9.0, 9.0});
    }
    SUBCASE("unknown class in a batch is rejected") {
        SurrogateDetector student;
        student.centroids = {{0.0, 0.0}};
        CHECK_THROWS_AS(
            cfb::student_update(student, {{labeled_point(7, {1.0f, 1.0f})}}, {}, 0.5, 1.0),
            cfb::ValidationError);
    }
}

TEST_CASE("teacher momentum updates") {
    SurrogateDetector teacher, student;
    teacher.centroids = {{0.0, 0.0}};
    student.centroids = {{2.0, 2.0}};

    SUBCASE("midpoint at half momentum") {
        cfb::ema_update(teacher, student, 0.5);
        CHECK(teacher.centroids[0] == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("fixed point when equal") {
        teacher.centroids = student.centroids;
        cfb::ema_update(teacher, student, 0.9);
        CHECK(teacher.centroids == student.centroids);
    }
    SUBCASE("geometric approach to a frozen student") {
        const int n = 40;
        for (int i = 0; i < n; ++i) cfb::ema_update(teacher, student, 0.999);
        const double expect = 2.0 * (1.0 - std::pow(0.999, n));
        CHECK(teacher.centroids[0][0] == doctest::Approx(expect).epsilon(1e-9));
    }
    SUBCASE("gap never grows under repeated updates") {
        teacher.centroids = {{10.0, -3.0}};
        double gap = dist(teacher.centroids[0], student.centroids[0]);
        for (int i = 0; i < 25; ++i) {
            cfb::ema_update(teacher, student, 0.97);
            const double next = dist(teacher.centroids[0], student.centroids[0]);
            REQUIRE(next <= gap + 1e-12);
            gap = next;
        }
    }
    SUBCASE("momentum outside the open interval") {
        CHECK_THROWS_AS(cfb::ema_update(teacher, student, 0.0), cfb::ConfigError);
        CHECK_THROWS_AS(cfb::ema_update(teacher, student, 1.0), cfb::ConfigError);
    }
    SUBCASE("shape mismatch") {
        SurrogateDetector other;
        other.centroids = {{1.0, 2.0}, {3.0, 4.0}};
        CHECK_THROWS_AS(cfb::ema_update(teacher, other, 0.5), cfb::ValidationError);
    }
}

TEST_CASE("burn-in trains, copies and warms") {
    auto config = small_config();
    config.labeled_count = 120;
    StreamSampler sampler(config);
    const auto labeled = sampler.sample_labeled(config.labeled_count);

    SimState state{
        .teacher = {.centroids = std::vector<std::vector<double>>(
                        3, std::vector<double>(config.dim, 0.0)),
                    .temperature = 0.1},
        .student = {.centroids = std::vector<std::vector<double>>(
                        3, std::vector<double>(config.dim, 0.0)),
                    .temperature = 0.1},
        .banks = cfb::FeatureBankSet(3, 20, config.dim),
    };
    cfb::run_burn_in(state, labeled, 5, 32);

    CHECK(state.teacher.centroids == state.student.centroids);
    CHECK(state.banks.is_warm());
    CHECK(cfb::detector_accuracy(state.teacher, labeled) >= 0.99);
}

TEST_CASE("burn-in refuses classes with no labeled data") {
    auto config = small_config();
    StreamSampler sampler(config);
    auto labeled = sampler.sample_labeled(30);
    std::vector<StreamRecord> only_two;
    for (auto& r : labeled)
        if (r.gt_class != 2) only_two.push_back(r);

    SimState state{
        .teacher = {.centroids = std::vector<std::vector<double>>(
                        3, std::vector<double>(config.dim, 0.0)),
                    .temperature = 0.1},
        .student = {.centroids = std::vector<std::vector<double>>(
                        3, std::vector<double>(config.dim, 0.0)),
                    .temperature = 0.1},
        .banks = cfb::FeatureBankSet(3, 5, config.dim),
    };
    CHECK_THROWS_WITH_AS(cfb::run_burn_in(state, only_two, 2, 16),
                         doctest::Contains("class 2"), cfb::WarmupError);
}

TEST_CASE("round-robin labeled sampling covers all classes") {
    auto config = small_config();
    StreamSampler sampler(config);
    const auto batch = sampler.sample_labeled(7);
    REQUIRE(batch.size() == 7);
    int counts[3] = {0, 0, 0};
    for (const auto& r : batch) ++counts[r.gt_class];
    CHECK(counts[0] == 3);
    CHECK(counts[1] == 2);
    CHECK(counts[2] == 2);
}
