#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfb/feature_bank.hpp"
#include "cfb/pseudo_filter.hpp"
#include "cfb/rng.hpp"

namespace cfb {

/// Synthetic drifting-cluster stream standing in for detector RoI features.
/// Class i features are isotropic unit-variance Gaussians around centroid i;
/// OOD features come from extra clusters placed at least `separation` away
/// from every other centroid. Drift rotates all centroids in a fixed random
/// plane by an arc of `drift_rate` per epoch.
struct StreamConfig {
    int num_id_classes = 5;
    int num_ood_classes = 1;
    std::size_t dim = 16;
    double separation = 4.0;     // min centroid spacing, units of within-cluster std
    double drift_rate = 0.0;     // centroid arc displacement per epoch, same units
    double contamination = 0.0;  // fraction of unlabeled draws that are OOD
    std::size_t labeled_count = 600;
    std::size_t unlabeled_count = 1000;
    std::uint64_t seed = 0;
};

struct StreamRecord {
    std::string record_id;
    Feature feature;
    bool labeled = false;
    int gt_class = -1;  // true class for ID records, -1 for OOD
    GtFlag gt_ood = GtFlag::unknown;
};

class StreamSampler {
public:
    /// Places centroids by rejection; ConfigError when the requested number
    /// of clusters cannot be separated in the given dimension.
    explicit StreamSampler(const StreamConfig& config);

    /// Labeled ID records, classes assigned round-robin so every class keeps
    /// appearing regardless of batch size.
    std::vector<StreamRecord> sample_labeled(std::size_t n);

    /// Unlabeled records; each draw is OOD with probability `contamination`.
    std::vector<StreamRecord> sample_unlabeled(std::size_t n);

    /// Fresh ID-only records for accuracy evaluation.
    std::vector<StreamRecord> sample_eval(std::size_t n);

    /// Applies one epoch of drift to every centroid.
    void advance_epoch();

    const StreamConfig& config() const { return config_; }
    std::size_t dim() const { return config_.dim; }
    int num_id_classes() const { return config_.num_id_classes; }
    const std::vector<std::vector<double>>& id_centroids() const { return id_centroids_; }

private:
    Feature draw_around(const std::vector<double>& centroid);

    StreamConfig config_;
    Rng rng_;
    std::vector<std::vector<double>> id_centroids_;
    std::vector<std::vector<double>> ood_centroids_;
    std::vector<double> drift_u_, drift_v_;  // orthonormal rotation plane
    std::uint64_t labeled_serial_ = 0;
    std::uint64_t unlabeled_serial_ = 0;
    std::uint64_t eval_serial_ = 0;
    std::uint64_t next_labeled_class_ = 0;
};

/// One-shot dataset: `labeled_count` labeled followed by `unlabeled_count`
/// unlabeled records at the initial centroid positions. Byte-identical for
/// identical configs.
std::vector<StreamRecord> gen_stream(const StreamConfig& config);

/// Nearest-centroid classifier. Logits are -temperature * squared distance to
/// each centroid, so the softmax is a Gaussian-posterior style confidence.
struct SurrogateDetector {
    std::vector<std::vector<double>> centroids;
    double temperature = 0.1;

    int num_classes() const { return static_cast<int>(centroids.size()); }
    std::size_t dim() const { return centroids.empty() ? 0 : centroids.front().size(); }
};

struct Prediction {
    int pred_class = 0;
    double confidence = 0.0;
    std::vector<double> logits;
};

Prediction predict(const SurrogateDetector& detector, std::span<const float> feature);

/// Moves each student centroid toward the mean of the features assigned to it:
///   delta_c = lr * [ (mean_labeled_c - centroid_c)            if class c in labeled batch ]
///           + lr * lambda * [ (mean_pseudo_c - centroid_c)    if class c in pseudo batch  ]
/// Classes absent from both batches are untouched.
void student_update(SurrogateDetector& student, std::span<const StreamRecord> labeled_batch,
                    std::span<const PseudoPrediction> kept_pseudo, double lr, double lambda);

/// teacher <- alpha * teacher + (1 - alpha) * student, element-wise.
void ema_update(SurrogateDetector& teacher, const SurrogateDetector& student, double alpha);

/// Teacher-student pair plus the feature bank and schedule position.
struct SimState {
    SurrogateDetector teacher;
    SurrogateDetector student;
    FeatureBankSet banks;
    std::uint64_t step = 0;         // t, advances per mutual-learning iteration
    std::uint64_t total_steps = 0;  // T
    double ema_alpha = 0.999;
    double loss_weight = 1.0;  // lambda
    double lr = 0.5;
};

/// Supervised-only stage: trains the student on the labeled dataset, copies
/// it into the teacher, then cycles the labeled features into the bank until
/// every class queue is full. WarmupError if some declared class has no
/// labeled data (its bank could never warm).
void run_burn_in(SimState& state, std::span<const StreamRecord> labeled_data, int epochs,
                 std::size_t batch_size);

/// Classification accuracy of `detector` on the ID records of `data`.
double detector_accuracy(const SurrogateDetector& detector, std::span<const StreamRecord> data);

}  // namespace cfb
