#include "cfb/ood_score.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cfb {

Metric parse_metric(std::string_view name) {
    if (name == "cosine") return Metric::cosine;
    if (name == "l1") return Metric::l1;
    if (name == "l2") return Metric::l2;
    throw ConfigError("unknown metric '" + std::string(name) + "', expected cosine, l1 or l2");
}

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::cosine: return "cosine";
        case Metric::l1: return "l1";
        case Metric::l2: return "l2";
    }
    return "?";
}

namespace {

void check_pair(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw ValidationError("distance between vectors of dimension " + std::to_string(a.size()) +
                              " and " + std::to_string(b.size()));
}

}  // namespace

double cosine_distance(std::span<const float> a, std::span<const float> b) {
    check_pair(a, b);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i], y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na <= 0.0 || nb <= 0.0) throw ValidationError("cosine distance of a zero-norm vector");
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

double l1_distance(std::span<const float> a, std::span<const float> b) {
    check_pair(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return acc;
}

double l2_distance(std::span<const float> a, std::span<const float> b) {
    check_pair(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

double metric_distance(Metric m, std::span<const float> a, std::span<const float> b) {
    switch (m) {
        case Metric::cosine: return cosine_distance(a, b);
        case Metric::l1: return l1_distance(a, b);
        case Metric::l2: return l2_distance(a, b);
    }
    throw ConfigError("unknown metric");
}

std::size_t k_from_ratio(std::size_t capacity, double ratio) {
    if (capacity == 0) throw ConfigError("bank capacity must be at least 1");
    if (!(ratio > 0.0) || ratio > 1.0)
        throw ConfigError("knn ratio must be in (0, 1], got " + std::to_string(ratio));
    const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(capacity)));
    return std::max<std::size_t>(1, k);
}

namespace {

// Distances to every prototype, skipping `skip` (npos = none). Neighbor order
// is ascending distance, exact ties resolved toward the older prototype.
std::vector<std::size_t> nearest(std::span<const float> query, const ClassFeatureBank& bank,
                                 std::size_t k, Metric metric, std::size_t skip,
                                 std::vector<double>& dist_out) {
    const std::size_t n = bank.size();
    dist_out.assign(n, 0.0);
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == skip) continue;
        dist_out[i] = metric_distance(metric, query, bank.prototype(i));
        order.push_back(i);
    }
    auto closer = [&](std::size_t a, std::size_t b) {
        if (dist_out[a] != dist_out[b]) return dist_out[a] < dist_out[b];
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      closer);
    order.resize(k);
    return order;
}

}  // namespace

std::vector<std::size_t> knn_indices(std::span<const float> query, const ClassFeatureBank& bank,
                                     std::size_t k, Metric metric) {
    if (k == 0) throw SizeError("k must be at least 1");
    if (bank.size() < k)
        throw SizeError("bank for class " + std::to_string(bank.class_id()) + " holds " +
                        std::to_string(bank.size()) + " prototypes, need " + std::to_string(k));
    std::vector<double> dist;
    return nearest(query, bank, k, metric, static_cast<std::size_t>(-1), dist);
}

double ood_score(std::span<const float> query, const ClassFeatureBank& bank, std::size_t k,
                 Metric metric) {
    if (k == 0) throw SizeError("k must be at least 1");
    if (bank.size() < k)
        throw SizeError("bank for class " + std::to_string(bank.class_id()) + " holds " +
                        std::to_string(bank.size()) + " prototypes, need " + std::to_string(k));
    std::vector<double> dist;
    const auto idx = nearest(query, bank, k, metric, static_cast<std::size_t>(-1), dist);
    // Summed nearest-first so the value is independent of insertion order.
    double acc = 0.0;
    for (std::size_t j : idx) acc += dist[j];
    return acc / static_cast<double>(k);
}

std::vector<double> prototype_scores(const ClassFeatureBank& bank, std::size_t k, Metric metric) {
    if (k == 0) throw SizeError("k must be at least 1");
    if (bank.size() < k + 1)
        throw SizeError("leave-one-out scores for class " + std::to_string(bank.class_id()) +
                        " need " + std::to_string(k + 1) + " prototypes, have " +
                        std::to_string(bank.size()));
    std::vector<double> scores(bank.size());
    std::vector<double> dist;
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const auto idx = nearest(bank.prototype(i), bank, k, metric, i, dist);
        double acc = 0.0;
        for (std::size_t j : idx) acc += dist[j];
        scores[i] = acc / static_cast<double>(k);
    }
    return scores;
}

}  // namespace cfb
