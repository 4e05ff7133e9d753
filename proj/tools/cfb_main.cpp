// Command-line front end: generate / burnin / filter / simulate / ablate /
// report. Every run is configured by an optional key-value file plus --set
// overrides, and every output artifact embeds the fully resolved config.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfb/erf.hpp"
#include "cfb/experiment.hpp"
#include "cfb/svg.hpp"
#include "json.hpp"

namespace {

using cfb::ExperimentConfig;
using ordered_json = nlohmann::ordered_json;

ExperimentConfig load_config(const std::string& config_path,
                             const std::vector<std::string>& sets) {
    ExperimentConfig config;
    if (!config_path.empty()) config = cfb::parse_config_file(config_path);
    cfb::apply_overrides(config, sets);
    cfb::validate_config(config);
    return config;
}

std::vector<std::string> config_echo_lines(const ExperimentConfig& config) {
    std::vector<std::string> lines;
    for (const auto& [key, value] : cfb::resolved_config(config))
        lines.push_back("# " + key + " = " + value);
    return lines;
}

ordered_json config_echo_json(const ExperimentConfig& config) {
    ordered_json j;
    j["type"] = "config";
    ordered_json cfg = ordered_json::object();
    for (const auto& [key, value] : cfb::resolved_config(config)) cfg[key] = value;
    j["config"] = std::move(cfg);
    return j;
}

void print_resolved(const ExperimentConfig& config) {
    for (const auto& [key, value] : cfb::resolved_config(config))
        std::cout << key << " = " << value << "\n";
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

int cmd_generate(const ExperimentConfig& config, const std::string& out_path) {
    const auto records = cfb::gen_stream(config.stream_config());
    auto ds = cfb::to_erf(records, config.stream_dim);
    ds.provenance = config_echo_lines(config);
    cfb::write_erf_file(out_path, ds);
    std::cout << "wrote " << ds.records.size() << " records (dim " << ds.dim << ") to " << out_path
              << "\n";
    return 0;
}

int cmd_burnin(const ExperimentConfig& config, const std::string& bank_path,
               const std::string& predictions_path) {
    const auto burnin = cfb::run_burnin_stage(config);
    print_resolved(config);
    burnin.state.banks.save_file(bank_path);
    std::cout << "burn-in accuracy " << fmt4(burnin.labeled_accuracy) << ", banks warm, snapshot "
              << bank_path << "\n";
    if (!predictions_path.empty()) {
        const auto preds = cfb::predict_batch(burnin.state.teacher, burnin.unlabeled);
        cfb::ErfDataset ds;
        ds.dim = config.stream_dim;
        ds.provenance = config_echo_lines(config);
        ds.records.reserve(preds.size());
        for (const auto& p : preds) {
            cfb::ErfRecord r;
            r.id = p.record_id;
            r.labeled = false;
            r.class_id = p.pred_class;
            r.confidence = static_cast<float>(p.confidence);
            r.gt = p.gt_ood;
            r.feature = p.feature;
            ds.records.push_back(std::move(r));
        }
        cfb::write_erf_file(predictions_path, ds);
        std::cout << "wrote " << ds.records.size() << " teacher predictions to "
                  << predictions_path << "\n";
    }
    return 0;
}

int cmd_filter(const ExperimentConfig& config, const std::string& bank_path,
               const std::string& in_path, const std::string& out_path, double progress) {
    if (!(progress >= 0.0 && progress <= 1.0))
        throw cfb::ConfigError("--progress must be in [0, 1]");
    auto banks = cfb::FeatureBankSet::load_file(bank_path);
    const auto ds = cfb::parse_erf_file(in_path);
    if (ds.dim != banks.dim())
        throw cfb::ValidationError("dataset dimension " + std::to_string(ds.dim) +
                                   " does not match bank dimension " +
                                   std::to_string(banks.dim()));
    std::vector<cfb::PseudoPrediction> preds;
    preds.reserve(ds.records.size());
    for (const auto& r : ds.records) {
        if (r.labeled)
            throw cfb::ValidationError("record '" + r.id +
                                       "' has role labeled; filter expects pseudo predictions");
        cfb::PseudoPrediction p;
        p.record_id = r.id;
        p.feature = r.feature;
        p.pred_class = r.class_id;
        p.confidence = r.confidence;
        p.gt_ood = r.gt;
        preds.push_back(std::move(p));
    }

    cfb::FilterParams params;
    params.k = cfb::k_from_ratio(banks.capacity(), config.knn_ratio);
    params.metric = config.metric;
    params.policy = config.threshold_policy();
    params.conf_tau = config.conf_tau;
    params.step = static_cast<std::uint64_t>(
        std::llround(progress * static_cast<double>(config.total_steps())));
    params.workers = config.filter_workers;
    cfb::ThresholdEngine engine(params.k, params.metric);
    const auto decisions = cfb::filter_predictions(preds, banks, engine, params);

    cfb::atomic_write(out_path, [&](std::ostream& out) {
        out << config_echo_json(config).dump() << "\n";
        for (const auto& d : decisions) {
            ordered_json j;
            j["record_id"] = d.record_id;
            j["kept"] = d.kept;
            j["reject_reason"] = std::string(cfb::reject_reason_name(d.reason));
            j["ood_score"] = d.ood_score ? ordered_json(*d.ood_score) : ordered_json(nullptr);
            j["threshold_used"] =
                d.threshold_used ? ordered_json(*d.threshold_used) : ordered_json(nullptr);
            j["beta"] = d.beta ? ordered_json(*d.beta) : ordered_json(nullptr);
            j["warmup"] = d.warmup;
            out << j.dump() << "\n";
        }
    });

    std::uint64_t kept = 0;
    for (const auto& d : decisions) kept += d.kept ? 1 : 0;
    std::cout << "kept " << kept << " of " << decisions.size() << " predictions, decisions in "
              << out_path << "\n";

    std::unordered_map<std::string, cfb::GtFlag> flags;
    bool any_known = false;
    for (const auto& r : ds.records) {
        flags.emplace(r.id, r.gt);
        any_known = any_known || r.gt != cfb::GtFlag::unknown;
    }
    if (any_known) {
        const auto confusion = cfb::filter_confusion(decisions, flags);
        std::cout << "ground truth: tp=" << confusion.tp << " fp=" << confusion.fp
                  << " tn=" << confusion.tn << " fn=" << confusion.fn;
        if (auto v = confusion.id_retention()) std::cout << " id_retention=" << fmt4(*v);
        if (auto v = confusion.ood_leakage()) std::cout << " ood_leakage=" << fmt4(*v);
        if (auto v = confusion.f1()) std::cout << " f1=" << fmt4(*v);
        std::cout << "\n";
    }
    return 0;
}

void write_plots(const cfb::RunResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);

    cfb::SvgLineChart retention("Filter quality per epoch", "epoch", "rate");
    std::vector<std::optional<double>> id_r, leak, purity, acc;
    for (const auto& rec : result.history) {
        id_r.push_back(rec.id_retention);
        leak.push_back(rec.ood_leakage);
        purity.push_back(rec.purity);
        acc.push_back(rec.teacher_accuracy);
    }
    retention.add_series("id_retention", id_r);
    retention.add_series("ood_leakage", leak);
    retention.add_series("purity", purity);
    retention.add_series("teacher_accuracy", acc);
    cfb::atomic_write(dir + "/retention.svg",
                      [&](std::ostream& out) { out << retention.render(); });

    bool any_thresholds = false;
    for (const auto& rec : result.history) any_thresholds |= !rec.per_class.empty();
    if (any_thresholds) {
        cfb::SvgLineChart traj("Per-class thresholds per epoch", "epoch", "tau");
        std::map<int, std::vector<std::optional<double>>> series;
        for (const auto& rec : result.history) {
            for (const auto& [c, t] : rec.per_class) {
                auto& vec = series[c];
                vec.resize(result.history.size());
            }
        }
        for (std::size_t e = 0; e < result.history.size(); ++e) {
            for (auto& [c, vec] : series) {
                const auto it = result.history[e].per_class.find(c);
                if (it != result.history[e].per_class.end()) vec[e] = it->second.tau;
            }
        }
        for (const auto& [c, vec] : series)
            traj.add_series("class " + std::to_string(c), vec);
        cfb::atomic_write(dir + "/thresholds.svg",
                          [&](std::ostream& out) { out << traj.render(); });
    }
}

int cmd_simulate(const ExperimentConfig& config, const std::string& out_path,
                 const std::string& plots_dir) {
    const auto result = cfb::run_experiment(config);
    cfb::atomic_write(out_path, [&](std::ostream& out) { cfb::write_history(out, result); });
    if (!plots_dir.empty()) write_plots(result, plots_dir);
    const auto& fin = result.final_epoch();
    std::cout << "history " << out_path << " (" << result.history.size() << " epochs)\n";
    std::cout << "burn-in accuracy " << fmt4(result.burnin_accuracy) << ", final teacher accuracy "
              << fmt4(fin.teacher_accuracy);
    if (fin.id_retention) std::cout << ", id_retention " << fmt4(*fin.id_retention);
    if (fin.ood_leakage) std::cout << ", ood_leakage " << fmt4(*fin.ood_leakage);
    if (fin.purity) std::cout << ", purity " << fmt4(*fin.purity);
    std::cout << "\n";
    return 0;
}

int cmd_ablate(const ExperimentConfig& config, const std::string& axis_name,
               const std::string& out_path) {
    const auto axis = cfb::parse_ablation_axis(axis_name);
    const auto rows = cfb::run_ablation(config, axis);
    const std::string table = cfb::render_ablation_table(rows);
    std::cout << table;
    if (!out_path.empty())
        cfb::atomic_write(out_path, [&](std::ostream& out) {
            for (const auto& line : config_echo_lines(config)) out << line << "\n";
            out << table;
        });
    return 0;
}

int cmd_report(const std::vector<std::string>& histories) {
    std::vector<cfb::HistorySummary> rows;
    rows.reserve(histories.size());
    for (const auto& path : histories) rows.push_back(cfb::summarize_history_file(path));
    std::cout << cfb::render_report(rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"class-wise feature bank OOD filtering for open-set self-training"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--set", sets, "override, key=value; repeatable")->allow_extra_args(false);
    };

    auto* generate = app.add_subcommand("generate", "emit a synthetic embedding dataset");
    std::string gen_out;
    add_common(generate);
    generate->add_option("--out", gen_out, "output dataset path")->required();

    auto* burnin = app.add_subcommand("burnin", "supervised burn-in plus bank warm-up");
    std::string bank_path, predictions_path;
    add_common(burnin);
    burnin->add_option("--bank", bank_path, "bank snapshot output path")->required();
    burnin->add_option("--predictions", predictions_path,
                       "also write teacher predictions over the unlabeled pool");

    auto* filter = app.add_subcommand("filter", "gate a prediction dataset against a bank");
    std::string filter_bank, filter_in, filter_out;
    double filter_progress = 1.0;
    add_common(filter);
    filter->add_option("--bank", filter_bank, "bank snapshot path")->required();
    filter->add_option("--in", filter_in, "prediction dataset path")->required();
    filter->add_option("--out", filter_out, "decision JSONL output path")->required();
    filter->add_option("--progress", filter_progress,
                       "training progress t/T in [0, 1] for the schedule (default 1)");

    auto* simulate = app.add_subcommand("simulate", "full burn-in + mutual-learning run");
    std::string sim_out, plots_dir;
    add_common(simulate);
    simulate->add_option("--out", sim_out, "history JSONL output path")->required();
    simulate->add_option("--plots", plots_dir, "also write SVG plots into this directory");

    auto* ablate = app.add_subcommand("ablate", "sweep one axis and print a comparison table");
    std::string axis_name, ablate_out;
    add_common(ablate);
    ablate->add_option("--axis", axis_name,
                       "bank_length | metric | threshold | bank_update")->required();
    ablate->add_option("--out", ablate_out, "also write the table to this path");

    auto* report = app.add_subcommand("report", "tabulate metrics from history files");
    std::vector<std::string> report_files;
    report->add_option("files", report_files, "history JSONL files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (generate->parsed()) return cmd_generate(load_config(config_path, sets), gen_out);
        if (burnin->parsed())
            return cmd_burnin(load_config(config_path, sets), bank_path, predictions_path);
        if (filter->parsed())
            return cmd_filter(load_config(config_path, sets), filter_bank, filter_in, filter_out,
                              filter_progress);
        if (simulate->parsed())
            return cmd_simulate(load_config(config_path, sets), sim_out, plots_dir);
        if (ablate->parsed())
            return cmd_ablate(load_config(config_path, sets), axis_name, ablate_out);
        if (report->parsed()) return cmd_report(report_files);
    } catch (const cfb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
