#include "w2s/evalreport.hpp"

#include <cstdio>

#include "w2s/common.hpp"
#include "w2s/jsonl.hpp"

namespace w2s {

EvalResult accuracy(const std::map<std::string, std::optional<int>>& preds,
                    const std::map<std::string, int>& gold) {
    EvalResult res;
    res.n = static_cast<int>(preds.size());
    int evaluated = 0, correct = 0, abstains = 0;
    for (const auto& [id, pred] : preds) {
        auto it = gold.find(id);
        if (it == gold.end()) throw DataError("prediction for unknown id \"" + id + "\"");
        if (!pred) {
            ++abstains;
            continue;
        }
        ++evaluated;
        if (*pred == it->second) ++correct;
    }
    res.accuracy = evaluated > 0 ? static_cast<double>(correct) / evaluated : 0.0;
    res.abstain_rate = res.n > 0 ? static_cast<double>(abstains) / res.n : 0.0;
    return res;
}

std::map<std::string, TopicRow> per_topic(const std::map<std::string, std::optional<int>>& preds,
                                          const std::map<std::string, int>& gold,
                                          const std::map<std::string, std::string>& topics) {
    std::map<std::string, std::map<std::string, std::optional<int>>> grouped;
    for (const auto& [id, pred] : preds) {
        auto it = topics.find(id);
        grouped[it == topics.end() ? "unknown" : it->second].emplace(id, pred);
    }
    std::map<std::string, TopicRow> out;
    for (const auto& [topic, topic_preds] : grouped) {
        EvalResult r = accuracy(topic_preds, gold);
        out[topic] = TopicRow{r.accuracy, r.n};
    }
    return out;
}

namespace {

Json eval_to_json(const EvalResult& r) {
    Json obj;
    obj["accuracy"] = r.accuracy;
    obj["n"] = r.n;
    obj["abstain_rate"] = r.abstain_rate;
    if (!r.per_topic.empty()) {
        Json topics;
        for (const auto& [topic, row] : r.per_topic) {
            topics[topic] = Json{{"accuracy", row.accuracy}, {"n", row.n}};
        }
        obj["per_topic"] = std::move(topics);
    }
    return obj;
}

EvalResult eval_from_json(const Json& obj) {
    EvalResult r;
    r.accuracy = obj.at("accuracy").get<double>();
    r.n = obj.at("n").get<int>();
    r.abstain_rate = obj.at("abstain_rate").get<double>();
    if (obj.contains("per_topic")) {
        for (const auto& [topic, row] : obj["per_topic"].items()) {
            r.per_topic[topic] = TopicRow{row.at("accuracy").get<double>(), row.at("n").get<int>()};
        }
    }
    return r;
}

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void emit_report(const W2SReport& report, const std::filesystem::path& path,
                 ReportFormat format) {
    if (format == ReportFormat::json) {
        Json obj;
        obj["weak"] = eval_to_json(report.weak);
        obj["strong"] = eval_to_json(report.strong);
        obj["delta"] = report.delta;
        obj["config_fingerprint"] = report.config_fingerprint;
        write_text_file(path, obj.dump(2) + "\n");
        return;
    }
    std::string csv = "metric,value,n\n";
    csv += "weak_accuracy," + csv_number(report.weak.accuracy) + "," +
           std::to_string(report.weak.n) + "\n";
    csv += "weak_abstain_rate," + csv_number(report.weak.abstain_rate) + "," +
           std::to_string(report.weak.n) + "\n";
    csv += "strong_accuracy," + csv_number(report.strong.accuracy) + "," +
           std::to_string(report.strong.n) + "\n";
    csv += "strong_abstain_rate," + csv_number(report.strong.abstain_rate) + "," +
           std::to_string(report.strong.n) + "\n";
    csv += "delta," + csv_number(report.delta) + "," + std::to_string(report.strong.n) + "\n";
    for (const auto& [topic, row] : report.weak.per_topic) {
        csv += "weak_topic_" + topic + "," + csv_number(row.accuracy) + "," +
               std::to_string(row.n) + "\n";
    }
    for (const auto& [topic, row] : report.strong.per_topic) {
        csv += "strong_topic_" + topic + "," + csv_number(row.accuracy) + "," +
               std::to_string(row.n) + "\n";
    }
    write_text_file(path, csv);
}

W2SReport read_report_json(const std::filesystem::path& path) {
    Json obj = Json::parse(read_text_file(path), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        throw DataError("malformed report: " + path.string());
    }
    W2SReport report;
    report.weak = eval_from_json(obj.at("weak"));
    report.strong = eval_from_json(obj.at("strong"));
    report.delta = obj.at("delta").get<double>();
    report.config_fingerprint = obj.at("config_fingerprint").get<std::string>();
    return report;
}

}  // namespace w2s
