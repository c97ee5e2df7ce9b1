// Python bindings: the CLI commands plus the pure helpers that are useful
// interactively. Heavy lifting stays in C++; Python sees files in, files out.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "w2s/commands.hpp"
#include "w2s/common.hpp"
#include "w2s/config.hpp"
#include "w2s/ensemble.hpp"
#include "w2s/icl.hpp"
#include "w2s/oversight.hpp"
#include "w2s/rng.hpp"
#include "w2s/templates.hpp"

namespace py = pybind11;

namespace {

w2s::Config config_from(const std::map<std::string, std::string>& entries) {
    w2s::Config cfg;
    for (const auto& [k, v] : entries) cfg.set(k, v);
    return cfg;
}

void run_command(const std::string& command, const std::map<std::string, std::string>& entries) {
    w2s::Config cfg = config_from(entries);
    if (command == "dataset prepare") {
        w2s::cmd_dataset_prepare(cfg);
    } else if (command == "ensemble run") {
        w2s::cmd_ensemble_run(cfg);
    } else if (command == "oversee interact") {
        w2s::cmd_oversee(cfg, "interact");
    } else if (command == "oversee debate") {
        w2s::cmd_oversee(cfg, "debate");
    } else if (command == "student train") {
        w2s::cmd_student_train(cfg);
    } else if (command == "icl run") {
        w2s::cmd_icl_run(cfg);
    } else if (command == "eval report") {
        w2s::cmd_eval_report(cfg);
    } else {
        throw w2s::ConfigError("unknown command: " + command);
    }
}

}  // namespace

PYBIND11_MODULE(_w2s, m) {
    m.doc() = "weak-to-strong generalization harness (native core)";

    py::register_exception<w2s::ConfigError>(m, "ConfigError");
    py::register_exception<w2s::DataError>(m, "DataError");
    py::register_exception<w2s::BackendError>(m, "BackendError");
    py::register_exception<w2s::FailureCapError>(m, "FailureCapError");

    m.def("run_command", &run_command, py::arg("command"), py::arg("config"),
          "Run one CLI command with the given flat config mapping "
          "(dotted keys, string values). Writes the command's files under "
          "config['out'].");

    m.def("extract_label", &w2s::extract_label, py::arg("text"),
          "Rule-based yes/no extraction; None when undecidable.");
    m.def("hard_vote", &w2s::hard_vote, py::arg("labels"),
          "Majority vote over {0,1}; ties resolve to 0.");
    m.def(
        "soft_vote",
        [](const std::vector<std::pair<double, double>>& dists) {
            std::vector<w2s::SoftLabel> soft;
            soft.reserve(dists.size());
            for (const auto& [p0, p1] : dists) soft.push_back(w2s::SoftLabel{p0, p1});
            auto [mean, label] = w2s::soft_vote(soft);
            return std::make_pair(std::make_pair(mean.p0, mean.p1), label);
        },
        py::arg("dists"),
        "Mean of (p0, p1) distributions plus the argmax label (tie -> 0).");
    m.def("format_confidence", &w2s::format_confidence, py::arg("value"),
          "Two-decimal half-up rendering, e.g. 0.875 -> '0.88'.");
    m.def("tokenize", &w2s::tokenize, py::arg("text"),
          "Lowercase alphanumeric word tokens.");
    m.def(
        "bm25_rank",
        [](const std::string& query,
           const std::vector<std::pair<std::string, std::string>>& corpus, int topn, double k1,
           double b) {
            w2s::RetrieverParams params;
            params.k1 = k1;
            params.b = b;
            auto ranked = w2s::bm25_rank(query, corpus, params, topn);
            std::vector<std::pair<std::string, double>> out;
            out.reserve(ranked.size());
            for (const auto& r : ranked) out.emplace_back(r.id, r.score);
            return out;
        },
        py::arg("query"), py::arg("corpus"), py::arg("topn"), py::arg("k1") = 1.5,
        py::arg("b") = 0.75, "Okapi BM25 ranking over (id, text) documents.");

    m.def("sha256_hex", [](const std::string& s) { return w2s::sha256_hex(s); }, py::arg("data"));
    m.def("fnv1a64", [](const std::string& s) { return w2s::fnv1a64(s); }, py::arg("data"));
    m.def("mix_seed", &w2s::mix_seed, py::arg("a"), py::arg("b"),
          "Combine two seeds into one stream key.");

    m.def("template_names", [] { return w2s::TemplateSet::builtin().names(); });
    m.def(
        "builtin_template",
        [](const std::string& name) { return w2s::TemplateSet::builtin().get(name).body; },
        py::arg("name"));
    m.def("render_template", &w2s::render_template, py::arg("body"), py::arg("values"),
          "Substitute [``name''] slots; unknown or unfilled slots raise ConfigError.");
    m.def("write_builtin_templates",
          [](const std::string& dir) { w2s::write_builtin_templates(dir); },
          py::arg("dir"));
}
