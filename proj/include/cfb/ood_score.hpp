#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cfb/feature_bank.hpp"

namespace cfb {

enum class Metric { cosine, l1, l2 };

Metric parse_metric(std::string_view name);  // ConfigError on unknown name
std::string_view metric_name(Metric m);

/// 1 - cos(a, b). 0 for identical directions, 2 for antipodal.
double cosine_distance(std::span<const float> a, std::span<const float> b);
double l1_distance(std::span<const float> a, std::span<const float> b);
double l2_distance(std::span<const float> a, std::span<const float> b);
double metric_distance(Metric m, std::span<const float> a, std::span<const float> b);

/// Neighbor count from a bank capacity and a ratio in (0, 1]:
/// K = max(1, floor(ratio * capacity)).
std::size_t k_from_ratio(std::size_t capacity, double ratio);

/// Indices of the k nearest prototypes, ascending by distance. Exact ties go
/// to the smaller insertion index (older prototype).
std::vector<std::size_t> knn_indices(std::span<const float> query, const ClassFeatureBank& bank,
                                     std::size_t k, Metric metric);

/// Mean distance from the query to its k nearest prototypes. For the cosine
/// metric this equals one minus the mean cosine similarity of the k nearest
/// neighbors; l1/l2 average the raw distances so larger still means more
/// anomalous.
double ood_score(std::span<const float> query, const ClassFeatureBank& bank, std::size_t k,
                 Metric metric);

/// Leave-one-out score per prototype: element i is the mean distance from
/// prototype i to its k nearest neighbors among the other prototypes.
/// Requires bank size >= k + 1.
std::vector<double> prototype_scores(const ClassFeatureBank& bank, std::size_t k, Metric metric);

}  // namespace cfb
