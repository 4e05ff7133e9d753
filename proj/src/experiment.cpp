#include "cfb/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "text_util.hpp"

namespace cfb {

using ordered_json = nlohmann::ordered_json;

const EpochRecord& RunResult::final_epoch() const {
    if (history.empty()) throw SizeError("run produced no epochs");
    return history.back();
}

BurninResult run_burnin_stage(const ExperimentConfig& config) {
    StreamSampler sampler(config.stream_config());
    auto labeled = sampler.sample_labeled(config.stream_labeled_count);
    auto unlabeled = sampler.sample_unlabeled(config.stream_unlabeled_count);

    SurrogateDetector init;
    init.temperature = config.temperature;
    init.centroids.assign(static_cast<std::size_t>(config.stream_classes),
                          std::vector<double>(config.stream_dim, 0.0));
    SimState state{
        .teacher = init,
        .student = init,
        .banks = FeatureBankSet(config.stream_classes, config.bank_capacity, config.stream_dim),
        .step = 0,
        .total_steps = config.total_steps(),
        .ema_alpha = config.ema_alpha,
        .loss_weight = config.loss_weight,
        .lr = config.sim_lr,
    };
    run_burn_in(state, labeled, config.sim_burnin_epochs, config.sim_batch_labeled);
    const double acc = detector_accuracy(state.teacher, labeled);
    return BurninResult{std::move(state), std::move(sampler), std::move(labeled),
                        std::move(unlabeled), acc};
}

std::vector<PseudoPrediction> predict_batch(const SurrogateDetector& teacher,
                                            std::span<const StreamRecord> records) {
    std::vector<PseudoPrediction> preds;
    preds.reserve(records.size());
    for (const auto& r : records) {
        const Prediction p = predict(teacher, r.feature);
        PseudoPrediction out;
        out.record_id = r.record_id;
        out.feature = r.feature;
        out.pred_class = p.pred_class;
        out.confidence = p.confidence;
        out.logits = p.logits;
        out.gt_ood = r.gt_ood;
        preds.push_back(std::move(out));
    }
    return preds;
}

std::vector<FilterDecision> gate_predictions(std::span<const PseudoPrediction> preds,
                                             const ExperimentConfig& config,
                                             const FeatureBankSet& banks, ThresholdEngine& engine,
                                             std::uint64_t step) {
    if (config.filter_kind == FilterKind::cfb) {
        FilterParams params;
        params.k = k_from_ratio(config.bank_capacity, config.knn_ratio);
        params.metric = config.metric;
        params.policy = config.threshold_policy();
        params.conf_tau = config.conf_tau;
        params.step = step;
        params.workers = config.filter_workers;
        return filter_predictions(preds, banks, engine, params);
    }

    std::vector<FilterDecision> out;
    out.reserve(preds.size());
    for (const auto& pred : preds) {
        if (pred.confidence < config.conf_tau) {
            FilterDecision d;
            d.record_id = pred.record_id;
            d.kept = false;
            d.reason = RejectReason::low_confidence;
            out.push_back(std::move(d));
            continue;
        }
        switch (config.filter_kind) {
            case FilterKind::none: {
                FilterDecision d;
                d.record_id = pred.record_id;
                d.kept = true;
                d.reason = RejectReason::none;
                out.push_back(std::move(d));
                break;
            }
            case FilterKind::msp:
                out.push_back(
                    baseline_decision(pred, BaselineScorer::msp, config.filter_msp_cutoff));
                break;
            case FilterKind::entropy:
                out.push_back(
                    baseline_decision(pred, BaselineScorer::entropy, config.filter_entropy_cutoff));
                break;
            case FilterKind::energy:
                out.push_back(
                    baseline_decision(pred, BaselineScorer::energy, config.filter_energy_cutoff));
                break;
            case FilterKind::cfb: break;  // handled above
        }
    }
    return out;
}

RunResult run_experiment(const ExperimentConfig& config) {
    BurninResult burnin = run_burnin_stage(config);
    SimState& state = burnin.state;
    StreamSampler& sampler = burnin.sampler;

    const std::size_t k = k_from_ratio(config.bank_capacity, config.knn_ratio);
    ThresholdEngine engine(k, config.metric);
    const bool cfb_adaptive = config.filter_kind == FilterKind::cfb &&
                              config.threshold_kind == ThresholdKind::adaptive;

    RunResult result{config, burnin.labeled_accuracy, {}};
    result.history.reserve(static_cast<std::size_t>(config.sim_epochs));

    for (int epoch = 1; epoch <= config.sim_epochs; ++epoch) {
        std::vector<FilterDecision> epoch_decisions;
        std::vector<PseudoPrediction> epoch_preds;
        std::unordered_map<std::string, GtFlag> flags;
        std::unordered_map<std::string, GroundTruth> truths;

        for (int it = 0; it < config.sim_iterations_per_epoch; ++it) {
            auto labeled_batch = sampler.sample_labeled(config.sim_batch_labeled);
            auto unlabeled_batch = sampler.sample_unlabeled(config.sim_batch_unlabeled);
            auto preds = predict_batch(state.teacher, unlabeled_batch);
            auto decisions = gate_predictions(preds, config, state.banks, engine, state.step);

            std::vector<PseudoPrediction> kept;
            for (std::size_t i = 0; i < preds.size(); ++i) {
                if (decisions[i].kept) kept.push_back(preds[i]);
            }
            student_update(state.student, labeled_batch, kept, state.lr, state.loss_weight);
            ema_update(state.teacher, state.student, state.ema_alpha);
            if (config.bank_update == BankUpdate::dynamic_update) {
                for (const auto& r : labeled_batch) state.banks.push(r.gt_class, r.feature);
            }
            ++state.step;

            for (const auto& r : unlabeled_batch) {
                flags.emplace(r.record_id, r.gt_ood);
                truths.emplace(r.record_id, GroundTruth{r.gt_ood, r.gt_class});
            }
            std::move(decisions.begin(), decisions.end(), std::back_inserter(epoch_decisions));
            std::move(preds.begin(), preds.end(), std::back_inserter(epoch_preds));
        }
        sampler.advance_epoch();

        EpochRecord rec;
        rec.epoch = epoch;
        rec.step = state.step;
        rec.progress =
            static_cast<double>(state.step) / static_cast<double>(state.total_steps);
        rec.confusion = filter_confusion(epoch_decisions, flags);
        rec.id_retention = rec.confusion.id_retention();
        rec.ood_leakage = rec.confusion.ood_leakage();
        rec.purity = pseudo_purity(epoch_decisions, epoch_preds, truths);
        rec.n_id = rec.confusion.tn + rec.confusion.fp;
        rec.n_ood = rec.confusion.tp + rec.confusion.fn;
        for (const auto& d : epoch_decisions) {
            if (d.kept) ++rec.kept;
            if (d.reason == RejectReason::low_confidence) ++rec.rejected_low_confidence;
            if (d.reason == RejectReason::ood) ++rec.rejected_ood;
            if (d.kept && d.warmup) ++rec.warmup_kept;
        }
        {
            std::vector<std::pair<double, bool>> scored;
            scored.reserve(epoch_decisions.size());
            for (std::size_t i = 0; i < epoch_decisions.size(); ++i) {
                const auto& d = epoch_decisions[i];
                if (d.ood_score && epoch_preds[i].gt_ood != GtFlag::unknown)
                    scored.emplace_back(*d.ood_score, epoch_preds[i].gt_ood == GtFlag::ood);
            }
            const bool has_ood = std::any_of(scored.begin(), scored.end(),
                                             [](const auto& s) { return s.second; });
            const bool has_id = std::any_of(scored.begin(), scored.end(),
                                            [](const auto& s) { return !s.second; });
            if (has_ood && has_id) rec.auroc = auroc(scored);
        }
        if (cfb_adaptive) {
            rec.beta = config.threshold_policy().schedule.at(state.step);
            for (int c = 0; c < state.banks.num_classes(); ++c) {
                const ClassStats& stats = engine.stats_for(state.banks, c);
                rec.per_class[c] =
                    ClassThresholdRecord{stats.mu, stats.sigma, threshold(stats, *rec.beta)};
            }
        }
        const auto eval = sampler.sample_eval(config.sim_eval_count);
        rec.teacher_accuracy = detector_accuracy(state.teacher, eval);
        result.history.push_back(std::move(rec));
    }
    return result;
}

namespace {

ordered_json optional_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

ordered_json epoch_json(const EpochRecord& rec) {
    ordered_json j;
    j["type"] = "epoch";
    j["epoch"] = rec.epoch;
    j["step"] = rec.step;
    j["progress"] = rec.progress;
    j["beta"] = optional_json(rec.beta);
    j["teacher_accuracy"] = rec.teacher_accuracy;
    j["kept"] = rec.kept;
    j["rejected_low_confidence"] = rec.rejected_low_confidence;
    j["rejected_ood"] = rec.rejected_ood;
    j["warmup_kept"] = rec.warmup_kept;
    j["n_id"] = rec.n_id;
    j["n_ood"] = rec.n_ood;
    j["tp"] = rec.confusion.tp;
    j["fp"] = rec.confusion.fp;
    j["tn"] = rec.confusion.tn;
    j["fn"] = rec.confusion.fn;
    j["unknown"] = rec.confusion.unknown;
    j["precision"] = optional_json(rec.confusion.precision());
    j["recall"] = optional_json(rec.confusion.recall());
    j["f1"] = optional_json(rec.confusion.f1());
    j["id_retention"] = optional_json(rec.id_retention);
    j["ood_leakage"] = optional_json(rec.ood_leakage);
    j["purity"] = optional_json(rec.purity);
    j["auroc"] = optional_json(rec.auroc);
    ordered_json per_class = ordered_json::object();
    for (const auto& [c, t] : rec.per_class) {
        ordered_json entry;
        entry["mu"] = t.mu;
        entry["sigma"] = t.sigma;
        entry["tau"] = t.tau;
        per_class[std::to_string(c)] = std::move(entry);
    }
    j["per_class"] = std::move(per_class);
    return j;
}

}  // namespace

void write_history(std::ostream& out, const RunResult& result) {
    ordered_json header;
    header["type"] = "config";
    ordered_json cfg = ordered_json::object();
    for (const auto& [key, value] : resolved_config(result.config)) cfg[key] = value;
    header["config"] = std::move(cfg);
    header["burnin_accuracy"] = result.burnin_accuracy;
    out << header.dump() << "\n";
    for (const auto& rec : result.history) out << epoch_json(rec).dump() << "\n";
}

std::string history_to_string(const RunResult& result) {
    std::ostringstream out;
    write_history(out, result);
    return out.str();
}

AblationAxis parse_ablation_axis(std::string_view name) {
    if (name == "bank_length") return AblationAxis::bank_length;
    if (name == "metric") return AblationAxis::metric;
    if (name == "threshold") return AblationAxis::threshold;
    if (name == "bank_update") return AblationAxis::bank_update;
    throw ConfigError("unknown ablation axis '" + std::string(name) +
                      "', expected bank_length, metric, threshold or bank_update");
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base, AblationAxis axis) {
    std::vector<AblationRow> rows;
    auto add = [&rows](std::string label, const ExperimentConfig& cfg) {
        rows.push_back(AblationRow{std::move(label), run_experiment(cfg)});
    };
    switch (axis) {
        case AblationAxis::bank_length:
            for (std::size_t L : {20u, 50u, 100u, 200u, 500u}) {
                ExperimentConfig cfg = base;
                cfg.bank_capacity = L;
                add("L=" + std::to_string(L), cfg);
            }
            break;
        case AblationAxis::metric:
            for (Metric m : {Metric::l1, Metric::l2, Metric::cosine}) {
                ExperimentConfig cfg = base;
                cfg.metric = m;
                add(std::string(metric_name(m)), cfg);
            }
            break;
        case AblationAxis::threshold: {
            for (double tau : {0.4, 0.5, 0.6, 0.7}) {
                ExperimentConfig cfg = base;
                cfg.filter_kind = FilterKind::cfb;
                cfg.threshold_kind = ThresholdKind::fixed;
                cfg.threshold_fixed_tau = tau;
                add("fixed tau=" + detail::format_double(tau), cfg);
            }
            const std::pair<double, double> ramps[] = {
                {0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {1.0, 2.0}, {0.0, 2.0}};
            for (const auto& [b0, b1] : ramps) {
                ExperimentConfig cfg = base;
                cfg.filter_kind = FilterKind::cfb;
                cfg.threshold_kind = ThresholdKind::adaptive;
                cfg.threshold_beta_init = b0;
                cfg.threshold_beta_final = b1;
                const std::string label =
                    b0 == b1 ? "beta=" + detail::format_double(b0)
                             : "beta=[" + detail::format_double(b0) + "," +
                                   detail::format_double(b1) + "]";
                add(label, cfg);
            }
            break;
        }
        case AblationAxis::bank_update:
            for (BankUpdate u : {BankUpdate::static_update, BankUpdate::dynamic_update}) {
                ExperimentConfig cfg = base;
                cfg.bank_update = u;
                add(u == BankUpdate::static_update ? "static" : "dynamic", cfg);
            }
            break;
    }
    return rows;
}

namespace {

std::string fmt_cell(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

std::string fmt_cell(double v) { return fmt_cell(std::optional<double>(v)); }

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            out << row[c];
            if (c + 1 < row.size()) out << std::string(width[c] - row[c].size(), ' ');
        }
        out << "\n";
    };
    emit(header);
    std::size_t total = 0;
    for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
    out << std::string(total, '-') << "\n";
    for (const auto& row : rows) emit(row);
    return out.str();
}

const std::vector<std::string> kMetricHeader = {
    "run", "filter", "threshold", "id_retention", "ood_leakage", "purity", "auroc", "f1",
    "teacher_acc"};

std::string threshold_label(const ExperimentConfig& cfg) {
    if (cfg.filter_kind != FilterKind::cfb) return "-";
    if (cfg.threshold_kind == ThresholdKind::fixed)
        return "fixed " + detail::format_double(cfg.threshold_fixed_tau);
    if (cfg.threshold_beta_init == cfg.threshold_beta_final)
        return "beta=" + detail::format_double(cfg.threshold_beta_init);
    return "beta=[" + detail::format_double(cfg.threshold_beta_init) + "," +
           detail::format_double(cfg.threshold_beta_final) + "]";
}

}  // namespace

std::string render_ablation_table(std::span<const AblationRow> rows) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& row : rows) {
        const EpochRecord& fin = row.result.final_epoch();
        cells.push_back({row.label, std::string(filter_kind_name(row.result.config.filter_kind)),
                         threshold_label(row.result.config), fmt_cell(fin.id_retention),
                         fmt_cell(fin.ood_leakage), fmt_cell(fin.purity), fmt_cell(fin.auroc),
                         fmt_cell(fin.confusion.f1()), fmt_cell(fin.teacher_accuracy)});
    }
    return render_table(kMetricHeader, cells);
}

HistorySummary summarize_history_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open history: " + path);
    std::string line;
    HistorySummary s;
    s.label = path;
    bool have_config = false, have_epoch = false;
    ordered_json last_epoch;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const std::string type = j.value("type", "");
        if (type == "config") {
            const auto& cfg = j.at("config");
            s.filter = cfg.at("filter.kind").get<std::string>();
            if (s.filter == "cfb") {
                if (cfg.at("threshold.kind").get<std::string>() == "fixed") {
                    s.threshold = "fixed " + cfg.at("threshold.fixed_tau").get<std::string>();
                } else {
                    const std::string b0 = cfg.at("threshold.beta_init").get<std::string>();
                    const std::string b1 = cfg.at("threshold.beta_final").get<std::string>();
                    s.threshold = b0 == b1 ? "beta=" + b0 : "beta=[" + b0 + "," + b1 + "]";
                }
            } else {
                s.threshold = "-";
            }
            have_config = true;
        } else if (type == "epoch") {
            last_epoch = std::move(j);
            have_epoch = true;
        } else {
            throw FormatError(path + ":" + std::to_string(lineno) + ": unknown record type '" +
                              type + "'");
        }
    }
    if (!have_config) throw FormatError(path + ": missing config record");
    if (!have_epoch) throw FormatError(path + ": no epoch records");
    auto opt = [&](const char* key) -> std::optional<double> {
        const auto& v = last_epoch.at(key);
        if (v.is_null()) return std::nullopt;
        return v.get<double>();
    };
    s.id_retention = opt("id_retention");
    s.ood_leakage = opt("ood_leakage");
    s.purity = opt("purity");
    s.auroc = opt("auroc");
    s.f1 = opt("f1");
    s.teacher_accuracy = last_epoch.at("teacher_accuracy").get<double>();
    return s;
}

std::string render_report(std::span<const HistorySummary> rows) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) {
        cells.push_back({r.label, r.filter, r.threshold, fmt_cell(r.id_retention),
                         fmt_cell(r.ood_leakage), fmt_cell(r.purity), fmt_cell(r.auroc),
                         fmt_cell(r.f1), fmt_cell(r.teacher_accuracy)});
    }
    return render_table(kMetricHeader, cells);
}

}  // namespace cfb
