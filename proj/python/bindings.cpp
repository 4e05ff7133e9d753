// Python bindings over the core operations: banks, scoring, thresholds,
// filtering, metrics and the simulation driver.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cfb/erf.hpp"
#include "cfb/experiment.hpp"

namespace py = pybind11;

namespace {

// cfb::Error subtypes surface in python as ValueError with the kind prefix
// kept in the message.
void translate_errors() {
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const cfb::Error& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "class-wise feature bank OOD filtering";
    translate_errors();

    py::enum_<cfb::Metric>(m, "Metric")
        .value("cosine", cfb::Metric::cosine)
        .value("l1", cfb::Metric::l1)
        .value("l2", cfb::Metric::l2);

    py::enum_<cfb::GtFlag>(m, "GtFlag")
        .value("id", cfb::GtFlag::id)
        .value("ood", cfb::GtFlag::ood)
        .value("unknown", cfb::GtFlag::unknown);

    py::enum_<cfb::RejectReason>(m, "RejectReason")
        .value("none", cfb::RejectReason::none)
        .value("low_confidence", cfb::RejectReason::low_confidence)
        .value("ood", cfb::RejectReason::ood)
        .value("cold_bank", cfb::RejectReason::cold_bank);

    py::class_<cfb::FeatureBankSet>(m, "FeatureBankSet")
        .def(py::init<int, std::size_t, std::size_t>(), py::arg("num_classes"),
             py::arg("capacity"), py::arg("dim"))
        .def_property_readonly("num_classes", &cfb::FeatureBankSet::num_classes)
        .def_property_readonly("capacity", &cfb::FeatureBankSet::capacity)
        .def_property_readonly("dim", &cfb::FeatureBankSet::dim)
        .def("push",
             [](cfb::FeatureBankSet& s, int class_id, const std::vector<float>& f) {
                 s.push(class_id, f);
             },
             py::arg("class_id"), py::arg("feature"))
        .def("is_warm", &cfb::FeatureBankSet::is_warm)
        .def("size", [](const cfb::FeatureBankSet& s, int c) { return s.bank(c).size(); },
             py::arg("class_id"))
        .def("prototypes",
             [](const cfb::FeatureBankSet& s, int c) { return s.bank(c).prototypes(); },
             py::arg("class_id"))
        .def("save", &cfb::FeatureBankSet::save_file, py::arg("path"))
        .def_static("load", &cfb::FeatureBankSet::load_file, py::arg("path"))
        .def("dumps",
             [](const cfb::FeatureBankSet& s) {
                 std::ostringstream out;
                 s.save(out);
                 return out.str();
             })
        .def_static("loads", [](const std::string& text) {
            std::istringstream in(text);
            return cfb::FeatureBankSet::load(in);
        });

    m.def("k_from_ratio", &cfb::k_from_ratio, py::arg("capacity"), py::arg("ratio"));
    m.def(
        "ood_score",
        [](const std::vector<float>& query, const cfb::FeatureBankSet& banks, int class_id,
           std::size_t k, cfb::Metric metric) {
            return cfb::ood_score(query, banks.bank(class_id), k, metric);
        },
        py::arg("query"), py::arg("banks"), py::arg("class_id"), py::arg("k"),
        py::arg("metric") = cfb::Metric::cosine);
    m.def(
        "prototype_scores",
        [](const cfb::FeatureBankSet& banks, int class_id, std::size_t k, cfb::Metric metric) {
            return cfb::prototype_scores(banks.bank(class_id), k, metric);
        },
        py::arg("banks"), py::arg("class_id"), py::arg("k"),
        py::arg("metric") = cfb::Metric::cosine);
    m.def(
        "class_stats",
        [](const std::vector<double>& scores) {
            const auto s = cfb::class_stats(scores);
            return py::make_tuple(s.mu, s.sigma);
        },
        py::arg("scores"), "returns (mu, sigma) with population sigma");
    m.def("threshold",
          [](double mu, double sigma, double beta) { return mu + beta * sigma; },
          py::arg("mu"), py::arg("sigma"), py::arg("beta"));

    m.def("msp_score",
          [](const std::vector<double>& l) { return cfb::msp_score(l); }, py::arg("logits"));
    m.def("entropy_score",
          [](const std::vector<double>& l) { return cfb::entropy_score(l); }, py::arg("logits"));
    m.def("energy_score",
          [](const std::vector<double>& l) { return cfb::energy_score(l); }, py::arg("logits"));
    m.def(
        "auroc",
        [](const std::vector<std::pair<double, bool>>& scored) { return cfb::auroc(scored); },
        py::arg("scored"), "pairs of (score, is_ood)");

    py::class_<cfb::FilterDecision>(m, "FilterDecision")
        .def_readonly("record_id", &cfb::FilterDecision::record_id)
        .def_readonly("kept", &cfb::FilterDecision::kept)
        .def_readonly("reason", &cfb::FilterDecision::reason)
        .def_readonly("ood_score", &cfb::FilterDecision::ood_score)
        .def_readonly("threshold_used", &cfb::FilterDecision::threshold_used)
        .def_readonly("beta", &cfb::FilterDecision::beta)
        .def_readonly("warmup", &cfb::FilterDecision::warmup)
        .def("__repr__", [](const cfb::FilterDecision& d) {
            return "FilterDecision(record_id='" + d.record_id +
                   "', kept=" + (d.kept ? "True" : "False") +
                   ", reason=" + std::string(cfb::reject_reason_name(d.reason)) + ")";
        });

    m.def(
        "filter_predictions",
        [](const std::vector<std::tuple<std::string, std::vector<float>, int, double>>& preds,
           const cfb::FeatureBankSet& banks, double knn_ratio, cfb::Metric metric,
           std::optional<double> fixed_tau, double beta, double conf_tau, int workers) {
            std::vector<cfb::PseudoPrediction> converted;
            converted.reserve(preds.size());
            for (const auto& [id, feature, cls, conf] : preds) {
                cfb::PseudoPrediction p;
                p.record_id = id;
                p.feature = feature;
                p.pred_class = cls;
                p.confidence = conf;
                converted.push_back(std::move(p));
            }
            cfb::FilterParams params;
            params.k = cfb::k_from_ratio(banks.capacity(), knn_ratio);
            params.metric = metric;
            params.policy = fixed_tau ? cfb::ThresholdPolicy::fixed(*fixed_tau)
                                      : cfb::ThresholdPolicy::adaptive(
                                            cfb::BetaSchedule::fixed(beta));
            params.conf_tau = conf_tau;
            params.workers = workers;
            cfb::ThresholdEngine engine(params.k, params.metric);
            return cfb::filter_predictions(converted, banks, engine, params);
        },
        py::arg("preds"), py::arg("banks"), py::arg("knn_ratio") = 0.05,
        py::arg("metric") = cfb::Metric::cosine, py::arg("fixed_tau") = std::nullopt,
        py::arg("beta") = 2.0, py::arg("conf_tau") = 0.7, py::arg("workers") = 1,
        "preds are (record_id, feature, pred_class, confidence) tuples");

    m.def(
        "run_simulation",
        [](const std::vector<std::pair<std::string, std::string>>& assignments) {
            cfb::ExperimentConfig config;
            for (const auto& [k, v] : assignments)
                cfb::apply_config_assignment(config, k, v, "config['" + k + "']");
            cfb::validate_config(config);
            const auto result = cfb::run_experiment(config);
            return cfb::history_to_string(result);
        },
        py::arg("assignments"),
        "runs the full pipeline from (key, value) pairs; returns the history as JSONL");

    m.def("config_schema", [] {
        py::list out;
        for (const auto& e : cfb::config_schema()) {
            out.append(py::make_tuple(std::string(e.key), std::string(e.type),
                                      std::string(e.default_value), std::string(e.doc)));
        }
        return out;
    });
}
