#include "cfb/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cfb {

namespace {

constexpr int kPlacementAttempts = 10000;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

std::vector<double> unit_gaussian_direction(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& x : v) {
            x = rng.gaussian();
            norm2 += x * x;
        }
    } while (norm2 <= 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

void validate_stream_config(const StreamConfig& c) {
    if (c.num_id_classes < 1) throw ConfigError("stream needs at least 1 in-distribution class");
    if (c.num_ood_classes < 0) throw ConfigError("stream OOD class count cannot be negative");
    if (c.dim == 0) throw ConfigError("stream dimension must be at least 1");
    if (!(c.separation > 0.0)) throw ConfigError("cluster separation must be positive");
    if (c.drift_rate < 0.0) throw ConfigError("drift rate cannot be negative");
    if (!(c.contamination >= 0.0 && c.contamination <= 1.0))
        throw ConfigError("contamination must be in [0, 1]");
    if (c.contamination > 0.0 && c.num_ood_classes == 0)
        throw ConfigError("contamination > 0 requires at least one OOD cluster");
}

}  // namespace

StreamSampler::StreamSampler(const StreamConfig& config)
    : config_(config), rng_(Rng::forked(config.seed, 17)) {
    validate_stream_config(config_);
    const std::size_t total =
        static_cast<std::size_t>(config_.num_id_classes + config_.num_ood_classes);

    // Centroids live on the sphere of radius `separation`; candidates are
    // rejected until each is at least `separation` from everything placed so
    // far. The pairwise-angle constraint this induces is scale-free, so a
    // given seed yields the same directions at every separation.
    std::vector<std::vector<double>> placed;
    placed.reserve(total);
    int attempts = 0;
    while (placed.size() < total) {
        auto cand = unit_gaussian_direction(rng_, config_.dim);
        for (auto& x : cand) x *= config_.separation;
        bool ok = true;
        for (const auto& p : placed) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < cand.size(); ++i)
                d2 += (cand[i] - p[i]) * (cand[i] - p[i]);
            if (d2 < config_.separation * config_.separation) {
                ok = false;
                break;
            }
        }
        if (ok) {
            placed.push_back(std::move(cand));
            attempts = 0;
        } else if (++attempts > kPlacementAttempts) {
            throw ConfigError("cannot place " + std::to_string(total) +
                              " cluster centroids at separation " +
                              std::to_string(config_.separation) + " in dimension " +
                              std::to_string(config_.dim));
        }
    }
    id_centroids_.assign(placed.begin(), placed.begin() + config_.num_id_classes);
    ood_centroids_.assign(placed.begin() + config_.num_id_classes, placed.end());

    drift_u_ = unit_gaussian_direction(rng_, config_.dim);
    if (config_.dim > 1) {
        // Gram-Schmidt a second direction for the rotation plane.
        std::vector<double> v;
        double norm2 = 0.0;
        do {
            v = unit_gaussian_direction(rng_, config_.dim);
            const double proj = dot(v, drift_u_);
            norm2 = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] -= proj * drift_u_[i];
                norm2 += v[i] * v[i];
            }
        } while (norm2 <= 1e-12);
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
        drift_v_ = std::move(v);
    } else {
        drift_v_ = drift_u_;
    }
}

Feature StreamSampler::draw_around(const std::vector<double>& centroid) {
    Feature f(config_.dim);
    for (std::size_t d = 0; d < config_.dim; ++d)
        f[d] = static_cast<float>(centroid[d] + rng_.gaussian());
    return f;
}

std::vector<StreamRecord> StreamSampler::sample_labeled(std::size_t n) {
    std::vector<StreamRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(next_labeled_class_ %
                                         static_cast<std::uint64_t>(config_.num_id_classes));
        ++next_labeled_class_;
        StreamRecord r;
        r.record_id = "lab-" + std::to_string(labeled_serial_++);
        r.feature = draw_around(id_centroids_[static_cast<std::size_t>(cls)]);
        r.labeled = true;
        r.gt_class = cls;
        r.gt_ood = GtFlag::id;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<StreamRecord> StreamSampler::sample_unlabeled(std::size_t n) {
    std::vector<StreamRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        StreamRecord r;
        r.record_id = "unl-" + std::to_string(unlabeled_serial_++);
        r.labeled = false;
        if (rng_.bernoulli(config_.contamination)) {
            const auto c = rng_.uniform_int(static_cast<std::uint64_t>(config_.num_ood_classes));
            r.feature = draw_around(ood_centroids_[static_cast<std::size_t>(c)]);
            r.gt_class = -1;
            r.gt_ood = GtFlag::ood;
        } else {
            const auto c = rng_.uniform_int(static_cast<std::uint64_t>(config_.num_id_classes));
            r.feature = draw_around(id_centroids_[static_cast<std::size_t>(c)]);
            r.gt_class = static_cast<int>(c);
            r.gt_ood = GtFlag::id;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<StreamRecord> StreamSampler::sample_eval(std::size_t n) {
    std::vector<StreamRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = rng_.uniform_int(static_cast<std::uint64_t>(config_.num_id_classes));
        StreamRecord r;
        r.record_id = "eval-" + std::to_string(eval_serial_++);
        r.feature = draw_around(id_centroids_[static_cast<std::size_t>(c)]);
        r.labeled = false;
        r.gt_class = static_cast<int>(c);
        r.gt_ood = GtFlag::id;
        out.push_back(std::move(r));
    }
    return out;
}

void StreamSampler::advance_epoch() {
    if (config_.drift_rate == 0.0 || config_.dim < 2) return;
    // Rigid rotation in the fixed (u, v) plane: pairwise distances, and with
    // them the separation guarantee, are preserved while every feature the
    // banks have already stored goes stale.
    const double phi = config_.drift_rate / config_.separation;
    const double c = std::cos(phi), s = std::sin(phi);
    auto rotate = [&](std::vector<double>& x) {
        const double a = dot(x, drift_u_);
        const double b = dot(x, drift_v_);
        const double ra = a * c - b * s;
        const double rb = a * s + b * c;
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += (ra - a) * drift_u_[i] + (rb - b) * drift_v_[i];
    };
    for (auto& m : id_centroids_) rotate(m);
    for (auto& m : ood_centroids_) rotate(m);
}

std::vector<StreamRecord> gen_stream(const StreamConfig& config) {
    StreamSampler sampler(config);
    auto out = sampler.sample_labeled(config.labeled_count);
    auto unlabeled = sampler.sample_unlabeled(config.unlabeled_count);
    out.insert(out.end(), std::make_move_iterator(unlabeled.begin()),
               std::make_move_iterator(unlabeled.end()));
    return out;
}

Prediction predict(const SurrogateDetector& detector, std::span<const float> feature) {
    if (detector.centroids.empty()) throw SizeError("detector has no classes");
    if (feature.size() != detector.dim())
        throw ValidationError("feature dimension " + std::to_string(feature.size()) +
                              " does not match detector dimension " +
                              std::to_string(detector.dim()));
    Prediction p;
    p.logits.resize(detector.centroids.size());
    for (std::size_t c = 0; c < detector.centroids.size(); ++c) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < feature.size(); ++i) {
            const double d = static_cast<double>(feature[i]) - detector.centroids[c][i];
            d2 += d * d;
        }
        p.logits[c] = -detector.temperature * d2;
    }
    const auto best = std::max_element(p.logits.begin(), p.logits.end());
    p.pred_class = static_cast<int>(best - p.logits.begin());
    p.confidence = msp_score(p.logits);
    return p;
}

void student_update(SurrogateDetector& student, std::span<const StreamRecord> labeled_batch,
                    std::span<const PseudoPrediction> kept_pseudo, double lr, double lambda) {
    const std::size_t C = student.centroids.size();
    const std::size_t D = student.dim();
    std::vector<std::vector<double>> lab_sum(C, std::vector<double>(D, 0.0));
    std::vector<std::vector<double>> pse_sum(C, std::vector<double>(D, 0.0));
    std::vector<std::size_t> lab_n(C, 0), pse_n(C, 0);

    for (const auto& r : labeled_batch) {
        if (r.gt_class < 0 || static_cast<std::size_t>(r.gt_class) >= C)
            throw ValidationError("labeled record '" + r.record_id + "' has undeclared class " +
                                  std::to_string(r.gt_class));
        if (r.feature.size() != D)
            throw ValidationError("labeled record '" + r.record_id + "' has wrong dimension");
        auto& acc = lab_sum[static_cast<std::size_t>(r.gt_class)];
        for (std::size_t d = 0; d < D; ++d) acc[d] += r.feature[d];
        ++lab_n[static_cast<std::size_t>(r.gt_class)];
    }
    for (const auto& p : kept_pseudo) {
        if (p.pred_class < 0 || static_cast<std::size_t>(p.pred_class) >= C)
            throw ValidationError("pseudo prediction '" + p.record_id +
                                  "' has undeclared class " + std::to_string(p.pred_class));
        if (p.feature.size() != D)
            throw ValidationError("pseudo prediction '" + p.record_id + "' has wrong dimension");
        auto& acc = pse_sum[static_cast<std::size_t>(p.pred_class)];
        for (std::size_t d = 0; d < D; ++d) acc[d] += p.feature[d];
        ++pse_n[static_cast<std::size_t>(p.pred_class)];
    }

    for (std::size_t c = 0; c < C; ++c) {
        auto& centroid = student.centroids[c];
        for (std::size_t d = 0; d < D; ++d) {
            double delta = 0.0;
            if (lab_n[c] > 0)
                delta += lr * (lab_sum[c][d] / static_cast<double>(lab_n[c]) - centroid[d]);
            if (pse_n[c] > 0)
                delta +=
                    lr * lambda * (pse_sum[c][d] / static_cast<double>(pse_n[c]) - centroid[d]);
            centroid[d] += delta;
        }
    }
}

void ema_update(SurrogateDetector& teacher, const SurrogateDetector& student, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("ema alpha must be in (0, 1), got " + std::to_string(alpha));
    if (teacher.centroids.size() != student.centroids.size() || teacher.dim() != student.dim())
        throw ValidationError("teacher and student shapes differ");
    for (std::size_t c = 0; c < teacher.centroids.size(); ++c) {
        for (std::size_t d = 0; d < teacher.dim(); ++d) {
            teacher.centroids[c][d] =
                alpha * teacher.centroids[c][d] + (1.0 - alpha) * student.centroids[c][d];
        }
    }
}

void run_burn_in(SimState& state, std::span<const StreamRecord> labeled_data, int epochs,
                 std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("burn-in batch size must be at least 1");
    const int C = state.student.num_classes();
    std::vector<bool> seen(static_cast<std::size_t>(C), false);
    for (const auto& r : labeled_data) {
        if (r.gt_class >= 0 && r.gt_class < C) seen[static_cast<std::size_t>(r.gt_class)] = true;
    }
    for (int c = 0; c < C; ++c) {
        if (!seen[static_cast<std::size_t>(c)])
            throw WarmupError("class " + std::to_string(c) +
                              " has no labeled data; its bank can never warm");
    }

    for (int e = 0; e < epochs; ++e) {
        for (std::size_t off = 0; off < labeled_data.size(); off += batch_size) {
            const std::size_t len = std::min(batch_size, labeled_data.size() - off);
            student_update(state.student, labeled_data.subspan(off, len), {}, state.lr,
                           state.loss_weight);
        }
    }
    state.teacher = state.student;

    // Warm-up fills every queue to capacity without ever evicting.
    while (!state.banks.is_warm()) {
        for (const auto& r : labeled_data) {
            auto& bank = state.banks.bank(r.gt_class);
            if (!bank.full()) bank.push(r.feature);
        }
    }
}

double detector_accuracy(const SurrogateDetector& detector, std::span<const StreamRecord> data) {
    std::uint64_t total = 0, correct = 0;
    for (const auto& r : data) {
        if (r.gt_ood != GtFlag::id || r.gt_class < 0) continue;
        ++total;
        if (predict(detector, r.feature).pred_class == r.gt_class) ++correct;
    }
    if (total == 0) throw SizeError("accuracy needs at least one in-distribution record");
    return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace cfb
