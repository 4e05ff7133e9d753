#include "cfb/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_set>

#include "text_util.hpp"

namespace cfb {

FilterKind parse_filter_kind(std::string_view name) {
    if (name == "none") return FilterKind::none;
    if (name == "cfb") return FilterKind::cfb;
    if (name == "msp") return FilterKind::msp;
    if (name == "entropy") return FilterKind::entropy;
    if (name == "energy") return FilterKind::energy;
    throw ConfigError("unknown filter '" + std::string(name) +
                      "', expected none, cfb, msp, entropy or energy");
}

std::string_view filter_kind_name(FilterKind k) {
    switch (k) {
        case FilterKind::none: return "none";
        case FilterKind::cfb: return "cfb";
        case FilterKind::msp: return "msp";
        case FilterKind::entropy: return "entropy";
        case FilterKind::energy: return "energy";
    }
    return "?";
}

StreamConfig ExperimentConfig::stream_config() const {
    StreamConfig s;
    s.num_id_classes = stream_classes;
    s.num_ood_classes = stream_ood_classes;
    s.dim = stream_dim;
    s.separation = stream_separation;
    s.drift_rate = stream_drift;
    s.contamination = stream_contamination;
    s.labeled_count = stream_labeled_count;
    s.unlabeled_count = stream_unlabeled_count;
    s.seed = seed_value();
    return s;
}

ThresholdPolicy ExperimentConfig::threshold_policy() const {
    if (threshold_kind == ThresholdKind::fixed) return ThresholdPolicy::fixed(threshold_fixed_tau);
    return ThresholdPolicy::adaptive(
        BetaSchedule::linear(threshold_beta_init, threshold_beta_final, total_steps()));
}

std::uint64_t ExperimentConfig::total_steps() const {
    return static_cast<std::uint64_t>(sim_epochs) *
           static_cast<std::uint64_t>(sim_iterations_per_epoch);
}

std::uint64_t ExperimentConfig::seed_value() const {
    if (!seed) throw ConfigError("seed must be set; every run is explicitly seeded");
    return *seed;
}

namespace {

constexpr std::array<ConfigEntry, 34> kSchema{{
    {"seed", "uint", "", "run seed; required, no default"},
    {"stream.classes", "int", "5", "in-distribution classes C"},
    {"stream.ood_classes", "int", "1", "OOD clusters mixed into unlabeled data"},
    {"stream.dim", "uint", "16", "feature dimension D"},
    {"stream.separation", "real", "4", "min centroid spacing, in within-cluster std units"},
    {"stream.drift", "real", "0", "centroid drift arc per epoch, same units"},
    {"stream.preset", "string", "custom",
     "contamination preset: custom, split1-m, split1-mo, split2-m, split2-mo"},
    {"stream.contamination", "real", "0", "fraction of unlabeled draws that are OOD"},
    {"stream.labeled_count", "uint", "600", "labeled records generated for burn-in"},
    {"stream.unlabeled_count", "uint", "1000", "unlabeled records in generated datasets"},
    {"bank.capacity", "uint", "100", "prototypes per class bank (L)"},
    {"bank.update", "string", "dynamic", "bank refresh after warm-up: dynamic or static"},
    {"metric", "string", "cosine", "distance metric: cosine, l1 or l2"},
    {"knn_ratio", "real", "0.05", "neighbor fraction r; K = max(1, floor(r*L))"},
    {"threshold.kind", "string", "adaptive", "OOD cut-off policy: adaptive or fixed"},
    {"threshold.fixed_tau", "real", "0.5", "cut-off for the fixed policy"},
    {"threshold.beta_init", "real", "1", "schedule start multiplier"},
    {"threshold.beta_final", "real", "2", "schedule end multiplier"},
    {"filter.kind", "string", "cfb", "gate: none, cfb, msp, entropy or energy"},
    {"filter.conf_tau", "real", "0.7", "confidence gate, applied before any scorer"},
    {"filter.msp_cutoff", "real", "0.9", "msp keeps score >= cutoff"},
    {"filter.entropy_cutoff", "real", "0.8", "entropy keeps score <= cutoff (nats)"},
    {"filter.energy_cutoff", "real", "0", "energy keeps score <= cutoff"},
    {"filter.workers", "int", "1", "threads for batch scoring; output is worker-count invariant"},
    {"sim.burnin_epochs", "int", "5", "supervised epochs before mutual learning"},
    {"sim.epochs", "int", "12", "mutual-learning epochs"},
    {"sim.iterations_per_epoch", "int", "20", "train iterations per epoch; T = epochs * iterations"},
    {"sim.batch_labeled", "uint", "64", "labeled batch size per iteration"},
    {"sim.batch_unlabeled", "uint", "64", "unlabeled batch size per iteration"},
    {"sim.eval_count", "uint", "400", "fresh eval records per epoch"},
    {"sim.lr", "real", "0.5", "student centroid step size, in (0, 1]"},
    {"sim.loss_weight", "real", "1", "pseudo-label loss weight (lambda)"},
    {"sim.ema_alpha", "real", "0.999", "teacher momentum (alpha), in (0, 1)"},
    {"sim.temperature", "real", "0.1", "logit scale of the surrogate detector"},
}};

double parse_real(std::string_view value, const std::string& where) {
    double v;
    try {
        v = detail::parse_number<double>(value, where);
    } catch (const FormatError& e) {
        throw ConfigError(e.message());
    }
    if (!std::isfinite(v)) throw ConfigError(where + ": value must be finite");
    return v;
}

template <typename T>
T parse_int(std::string_view value, const std::string& where) {
    try {
        return detail::parse_number<T>(value, where);
    } catch (const FormatError& e) {
        throw ConfigError(e.message());
    }
}

}  // namespace

std::span<const ConfigEntry> config_schema() { return kSchema; }

void apply_config_assignment(ExperimentConfig& config, std::string_view key,
                             std::string_view value, const std::string& where) {
    auto fail = [&](const std::string& msg) -> void { throw ConfigError(where + ": " + msg); };

    if (key == "seed") {
        config.seed = parse_int<std::uint64_t>(value, where);
    } else if (key == "stream.classes") {
        config.stream_classes = parse_int<int>(value, where);
        if (config.stream_classes < 1) fail("stream.classes must be at least 1");
    } else if (key == "stream.ood_classes") {
        config.stream_ood_classes = parse_int<int>(value, where);
        if (config.stream_ood_classes < 0) fail("stream.ood_classes cannot be negative");
    } else if (key == "stream.dim") {
        config.stream_dim = parse_int<std::size_t>(value, where);
        if (config.stream_dim == 0) fail("stream.dim must be at least 1");
    } else if (key == "stream.separation") {
        config.stream_separation = parse_real(value, where);
        if (!(config.stream_separation > 0.0)) fail("stream.separation must be positive");
    } else if (key == "stream.drift") {
        config.stream_drift = parse_real(value, where);
        if (config.stream_drift < 0.0) fail("stream.drift cannot be negative");
    } else if (key == "stream.preset") {
        // Contamination regimes; applying a preset assigns stream.contamination,
        // later explicit assignments still win.
        if (value == "custom") {
        } else if (value == "split1-m") {
            config.stream_contamination = 0.286;
        } else if (value == "split1-mo") {
            config.stream_contamination = 0.632;
        } else if (value == "split2-m") {
            config.stream_contamination = 0.145;
        } else if (value == "split2-mo") {
            config.stream_contamination = 0.368;
        } else {
            fail("unknown preset '" + std::string(value) +
                 "', expected custom, split1-m, split1-mo, split2-m or split2-mo");
        }
        config.stream_preset = std::string(value);
    } else if (key == "stream.contamination") {
        config.stream_contamination = parse_real(value, where);
        if (!(config.stream_contamination >= 0.0 && config.stream_contamination <= 1.0))
            fail("stream.contamination must be in [0, 1]");
    } else if (key == "stream.labeled_count") {
        config.stream_labeled_count = parse_int<std::size_t>(value, where);
    } else if (key == "stream.unlabeled_count") {
        config.stream_unlabeled_count = parse_int<std::size_t>(value, where);
    } else if (key == "bank.capacity") {
        config.bank_capacity = parse_int<std::size_t>(value, where);
        if (config.bank_capacity == 0) fail("bank.capacity must be at least 1");
    } else if (key == "bank.update") {
        if (value == "dynamic") {
            config.bank_update = BankUpdate::dynamic_update;
        } else if (value == "static") {
            config.bank_update = BankUpdate::static_update;
        } else {
            fail("bank.update must be 'dynamic' or 'static'");
        }
    } else if (key == "metric") {
        try {
            config.metric = parse_metric(value);
        } catch (const ConfigError& e) {
            fail(e.message());
        }
    } else if (key == "knn_ratio") {
        config.knn_ratio = parse_real(value, where);
        if (!(config.knn_ratio > 0.0 && config.knn_ratio <= 1.0))
            fail("knn_ratio must be in (0, 1]");
    } else if (key == "threshold.kind") {
        if (value == "adaptive") {
            config.threshold_kind = ThresholdKind::adaptive;
        } else if (value == "fixed") {
            config.threshold_kind = ThresholdKind::fixed;
        } else {
            fail("threshold.kind must be 'adaptive' or 'fixed'");
        }
    } else if (key == "threshold.fixed_tau") {
        config.threshold_fixed_tau = parse_real(value, where);
        if (!(config.threshold_fixed_tau > 0.0)) fail("threshold.fixed_tau must be positive");
    } else if (key == "threshold.beta_init") {
        config.threshold_beta_init = parse_real(value, where);
    } else if (key == "threshold.beta_final") {
        config.threshold_beta_final = parse_real(value, where);
    } else if (key == "filter.kind") {
        try {
            config.filter_kind = parse_filter_kind(value);
        } catch (const ConfigError& e) {
            fail(e.message());
        }
    } else if (key == "filter.conf_tau") {
        config.conf_tau = parse_real(value, where);
        if (!(config.conf_tau >= 0.0 && config.conf_tau <= 1.0))
            fail("filter.conf_tau must be in [0, 1]");
    } else if (key == "filter.msp_cutoff") {
        config.filter_msp_cutoff = parse_real(value, where);
        if (!(config.filter_msp_cutoff >= 0.0 && config.filter_msp_cutoff <= 1.0))
            fail("filter.msp_cutoff must be in [0, 1]");
    } else if (key == "filter.entropy_cutoff") {
        config.filter_entropy_cutoff = parse_real(value, where);
        if (config.filter_entropy_cutoff < 0.0) fail("filter.entropy_cutoff cannot be negative");
    } else if (key == "filter.energy_cutoff") {
        config.filter_energy_cutoff = parse_real(value, where);
    } else if (key == "filter.workers") {
        config.filter_workers = parse_int<int>(value, where);
        if (config.filter_workers < 1 || config.filter_workers > 256)
            fail("filter.workers must be in [1, 256]");
    } else if (key == "sim.burnin_epochs") {
        config.sim_burnin_epochs = parse_int<int>(value, where);
        if (config.sim_burnin_epochs < 0) fail("sim.burnin_epochs cannot be negative");
    } else if (key == "sim.epochs") {
        config.sim_epochs = parse_int<int>(value, where);
        if (config.sim_epochs < 1) fail("sim.epochs must be at least 1");
    } else if (key == "sim.iterations_per_epoch") {
        config.sim_iterations_per_epoch = parse_int<int>(value, where);
        if (config.sim_iterations_per_epoch < 1) fail("sim.iterations_per_epoch must be at least 1");
    } else if (key == "sim.batch_labeled") {
        config.sim_batch_labeled = parse_int<std::size_t>(value, where);
        if (config.sim_batch_labeled == 0) fail("sim.batch_labeled must be at least 1");
    } else if (key == "sim.batch_unlabeled") {
        config.sim_batch_unlabeled = parse_int<std::size_t>(value, where);
        if (config.sim_batch_unlabeled == 0) fail("sim.batch_unlabeled must be at least 1");
    } else if (key == "sim.eval_count") {
        config.sim_eval_count = parse_int<std::size_t>(value, where);
        if (config.sim_eval_count == 0) fail("sim.eval_count must be at least 1");
    } else if (key == "sim.lr") {
        config.sim_lr = parse_real(value, where);
        if (!(config.sim_lr > 0.0 && config.sim_lr <= 1.0)) fail("sim.lr must be in (0, 1]");
    } else if (key == "sim.loss_weight") {
        config.loss_weight = parse_real(value, where);
        if (config.loss_weight < 0.0) fail("sim.loss_weight cannot be negative");
    } else if (key == "sim.ema_alpha") {
        config.ema_alpha = parse_real(value, where);
        if (!(config.ema_alpha > 0.0 && config.ema_alpha < 1.0))
            fail("sim.ema_alpha must be in (0, 1)");
    } else if (key == "sim.temperature") {
        config.temperature = parse_real(value, where);
        if (!(config.temperature > 0.0)) fail("sim.temperature must be positive");
    } else {
        fail("unknown configuration key '" + std::string(key) + "'");
    }
}

ExperimentConfig parse_config(std::istream& in, const std::string& name) {
    ExperimentConfig config;
    std::string line;
    std::size_t lineno = 0;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(where + ": expected 'key = value', got '" + std::string(trimmed) +
                              "'");
        const std::string key(detail::trim(trimmed.substr(0, eq)));
        const std::string value(detail::trim(trimmed.substr(eq + 1)));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
        apply_config_assignment(config, key, value, where);
    }
    return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    return parse_config(in, path);
}

void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& assignments) {
    for (const auto& a : assignments) {
        const std::string where = "--set " + a;
        const auto eq = a.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key=value");
        const std::string key(detail::trim(std::string_view(a).substr(0, eq)));
        const std::string value(detail::trim(std::string_view(a).substr(eq + 1)));
        if (key.empty()) throw ConfigError(where + ": empty key");
        apply_config_assignment(config, key, value, where);
    }
}

void validate_config(ExperimentConfig& config) {
    (void)config.seed_value();
    if (config.stream_contamination > 0.0 && config.stream_ood_classes == 0)
        throw ConfigError("stream.contamination > 0 requires stream.ood_classes >= 1");
    const std::size_t k = k_from_ratio(config.bank_capacity, config.knn_ratio);
    if (config.threshold_kind == ThresholdKind::adaptive && config.bank_capacity < k + 1)
        throw ConfigError("adaptive threshold needs bank.capacity >= K + 1 (K = " +
                          std::to_string(k) + "); raise bank.capacity or lower knn_ratio");
    if (config.filter_kind == FilterKind::cfb && config.threshold_kind == ThresholdKind::fixed &&
        config.metric == Metric::cosine && config.threshold_fixed_tau > 2.0)
        throw ConfigError("threshold.fixed_tau above 2 can never reject under the cosine metric");
    if (config.stream_labeled_count == 0)
        throw ConfigError("stream.labeled_count must be at least 1");
}

std::vector<std::pair<std::string, std::string>> resolved_config(const ExperimentConfig& config) {
    auto real = [](double v) { return detail::format_double(v); };
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& entry : config_schema()) {
        const std::string key(entry.key);
        std::string value;
        if (key == "seed") {
            value = std::to_string(config.seed_value());
        } else if (key == "stream.classes") {
            value = std::to_string(config.stream_classes);
        } else if (key == "stream.ood_classes") {
            value = std::to_string(config.stream_ood_classes);
        } else if (key == "stream.dim") {
            value = std::to_string(config.stream_dim);
        } else if (key == "stream.separation") {
            value = real(config.stream_separation);
        } else if (key == "stream.drift") {
            value = real(config.stream_drift);
        } else if (key == "stream.preset") {
            value = config.stream_preset;
        } else if (key == "stream.contamination") {
            value = real(config.stream_contamination);
        } else if (key == "stream.labeled_count") {
            value = std::to_string(config.stream_labeled_count);
        } else if (key == "stream.unlabeled_count") {
            value = std::to_string(config.stream_unlabeled_count);
        } else if (key == "bank.capacity") {
            value = std::to_string(config.bank_capacity);
        } else if (key == "bank.update") {
            value = config.bank_update == BankUpdate::dynamic_update ? "dynamic" : "static";
        } else if (key == "metric") {
            value = std::string(metric_name(config.metric));
        } else if (key == "knn_ratio") {
            value = real(config.knn_ratio);
        } else if (key == "threshold.kind") {
            value = config.threshold_kind == ThresholdKind::adaptive ? "adaptive" : "fixed";
        } else if (key == "threshold.fixed_tau") {
            value = real(config.threshold_fixed_tau);
        } else if (key == "threshold.beta_init") {
            value = real(config.threshold_beta_init);
        } else if (key == "threshold.beta_final") {
            value = real(config.threshold_beta_final);
        } else if (key == "filter.kind") {
            value = std::string(filter_kind_name(config.filter_kind));
        } else if (key == "filter.conf_tau") {
            value = real(config.conf_tau);
        } else if (key == "filter.msp_cutoff") {
            value = real(config.filter_msp_cutoff);
        } else if (key == "filter.entropy_cutoff") {
            value = real(config.filter_entropy_cutoff);
        } else if (key == "filter.energy_cutoff") {
            value = real(config.filter_energy_cutoff);
        } else if (key == "filter.workers") {
            value = std::to_string(config.filter_workers);
        } else if (key == "sim.burnin_epochs") {
            value = std::to_string(config.sim_burnin_epochs);
        } else if (key == "sim.epochs") {
            value = std::to_string(config.sim_epochs);
        } else if (key == "sim.iterations_per_epoch") {
            value = std::to_string(config.sim_iterations_per_epoch);
        } else if (key == "sim.batch_labeled") {
            value = std::to_string(config.sim_batch_labeled);
        } else if (key == "sim.batch_unlabeled") {
            value = std::to_string(config.sim_batch_unlabeled);
        } else if (key == "sim.eval_count") {
            value = std::to_string(config.sim_eval_count);
        } else if (key == "sim.lr") {
            value = real(config.sim_lr);
        } else if (key == "sim.loss_weight") {
            value = real(config.loss_weight);
        } else if (key == "sim.ema_alpha") {
            value = real(config.ema_alpha);
        } else if (key == "sim.temperature") {
            value = real(config.temperature);
        }
        out.emplace_back(key, std::move(value));
    }
    return out;
}

}  // namespace cfb
