#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfb/ood_score.hpp"
#include "cfb/pseudo_filter.hpp"
#include "cfb/sim.hpp"

namespace cfb {

enum class FilterKind { none, cfb, msp, entropy, energy };
enum class BankUpdate { dynamic_update, static_update };
enum class ThresholdKind { adaptive, fixed };

FilterKind parse_filter_kind(std::string_view name);
std::string_view filter_kind_name(FilterKind k);

/// Every knob of a run in one place. Every key has a documented default
/// except `seed`, which must always be given explicitly. Unknown keys are an
/// error, not a warning.
struct ExperimentConfig {
    std::optional<std::uint64_t> seed;  // required

    // stream
    int stream_classes = 5;
    int stream_ood_classes = 1;
    std::size_t stream_dim = 16;
    double stream_separation = 4.0;
    double stream_drift = 0.0;
    double stream_contamination = 0.0;
    std::string stream_preset = "custom";
    std::size_t stream_labeled_count = 600;
    std::size_t stream_unlabeled_count = 1000;

    // bank
    std::size_t bank_capacity = 100;
    BankUpdate bank_update = BankUpdate::dynamic_update;

    // scoring
    Metric metric = Metric::cosine;
    double knn_ratio = 0.05;

    // threshold policy
    ThresholdKind threshold_kind = ThresholdKind::adaptive;
    double threshold_fixed_tau = 0.5;
    double threshold_beta_init = 1.0;
    double threshold_beta_final = 2.0;

    // filtering
    FilterKind filter_kind = FilterKind::cfb;
    double conf_tau = 0.7;
    double filter_msp_cutoff = 0.9;
    double filter_entropy_cutoff = 0.8;
    double filter_energy_cutoff = 0.0;
    int filter_workers = 1;

    // simulation loop
    int sim_burnin_epochs = 5;
    int sim_epochs = 12;
    int sim_iterations_per_epoch = 20;
    std::size_t sim_batch_labeled = 64;
    std::size_t sim_batch_unlabeled = 64;
    std::size_t sim_eval_count = 400;
    double sim_lr = 0.5;
    double loss_weight = 1.0;
    double ema_alpha = 0.999;
    double temperature = 0.1;

    StreamConfig stream_config() const;
    ThresholdPolicy threshold_policy() const;  // schedule over T = epochs * iterations
    std::uint64_t total_steps() const;
    std::uint64_t seed_value() const;  // ConfigError when seed was never set
};

struct ConfigEntry {
    std::string_view key;
    std::string_view type;           // int | uint | real | string
    std::string_view default_value;  // empty = required
    std::string_view doc;
};

/// Schema table, in documentation order.
std::span<const ConfigEntry> config_schema();

/// Applies one `key = value` assignment. ConfigError on unknown keys, bad
/// values, or out-of-range settings. `where` prefixes diagnostics.
void apply_config_assignment(ExperimentConfig& config, std::string_view key,
                             std::string_view value, const std::string& where);

/// Parses a key-value config file. Lines are `key = value`, blank, or `#`
/// comments. Duplicate keys are an error.
ExperimentConfig parse_config(std::istream& in, const std::string& name = "<stream>");
ExperimentConfig parse_config_file(const std::string& path);

/// Applies `--set key=value` style overrides in order.
void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& assignments);

/// Cross-field validation (ranges, preset resolution, geometry sanity).
/// Called by the CLI after all overrides are in.
void validate_config(ExperimentConfig& config);

/// Fully resolved `key = value` lines for every schema key, in schema order.
std::vector<std::pair<std::string, std::string>> resolved_config(const ExperimentConfig& config);

}  // namespace cfb
