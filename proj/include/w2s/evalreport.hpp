#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace w2s {

struct TopicRow {
    double accuracy = 0.0;
    int n = 0;
};

struct EvalResult {
    double accuracy = 0.0;
    int n = 0;  // total predictions, abstains included
    double abstain_rate = 0.0;
    std::map<std::string, TopicRow> per_topic;  // empty = not broken down
};

struct W2SReport {
    EvalResult weak;
    EvalResult strong;
    double delta = 0.0;  // strong.accuracy - weak.accuracy
    std::string config_fingerprint;
};

/// Fraction correct over non-abstain predictions; abstains are counted in
/// abstain_rate only. Every prediction id must have a gold label.
EvalResult accuracy(const std::map<std::string, std::optional<int>>& preds,
                    const std::map<std::string, int>& gold);

/// Per-topic rows; pairs without a topic tag land under "unknown".
std::map<std::string, TopicRow> per_topic(const std::map<std::string, std::optional<int>>& preds,
                                          const std::map<std::string, int>& gold,
                                          const std::map<std::string, std::string>& topics);

enum class ReportFormat { json, csv };

/// Stable field order; re-emitting an identical report is byte-identical.
void emit_report(const W2SReport& report, const std::filesystem::path& path, ReportFormat format);

W2SReport read_report_json(const std::filesystem::path& path);

}  // namespace w2s
