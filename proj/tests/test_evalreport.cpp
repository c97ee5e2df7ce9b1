#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <functional>

#include "w2s/common.hpp"
#include "w2s/evalreport.hpp"
#include "w2s/jsonl.hpp"

using namespace w2s;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    fs::path dir = fs::temp_directory_path() / "w2s_evalreport_test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("accuracy over non-abstain predictions") {
    std::map<std::string, std::optional<int>> preds = {
        {"a", 1}, {"b", 0}, {"c", std::nullopt}, {"d", 1}};
    std::map<std::string, int> gold = {{"a", 1}, {"b", 1}, {"c", 0}, {"d", 1}};
    auto res = accuracy(preds, gold);
    CHECK(res.n == 4);
    CHECK(res.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(res.abstain_rate == doctest::Approx(0.25));

    std::map<std::string, std::optional<int>> all_abstain = {{"a", std::nullopt},
                                                             {"b", std::nullopt}};
    auto empty_eval = accuracy(all_abstain, gold);
    CHECK(empty_eval.accuracy == 0.0);
    CHECK(empty_eval.abstain_rate == 1.0);

    auto nothing = accuracy({}, gold);
    CHECK(nothing.n == 0);
    CHECK(nothing.accuracy == 0.0);
    CHECK(nothing.abstain_rate == 0.0);

    std::map<std::string, std::optional<int>> stray = {{"zz", 1}};
    CHECK_THROWS_AS(accuracy(stray, gold), DataError);
}

TEST_CASE("per_topic buckets untagged pairs under unknown") {
    std::map<std::string, std::optional<int>> preds = {
        {"a", 1}, {"b", 0}, {"c", std::nullopt}, {"d", 1}};
    std::map<std::string, int> gold = {{"a", 1}, {"b", 1}, {"c", 0}, {"d", 1}};
    std::map<std::string, std::string> topics = {{"a", "bio"}, {"b", "bio"}, {"d", "chem"}};
    auto rows = per_topic(preds, gold, topics);
    REQUIRE(rows.size() == 3);
    CHECK(rows.at("bio").n == 2);
    CHECK(rows.at("bio").accuracy == doctest::Approx(0.5));
    CHECK(rows.at("chem").n == 1);
    CHECK(rows.at("chem").accuracy == doctest::Approx(1.0));
    CHECK(rows.at("unknown").n == 1);
    CHECK(rows.at("unknown").accuracy == 0.0);  // only an abstain
}

TEST_CASE("json report roundtrips and emits stable bytes") {
    W2SReport report;
    report.weak = EvalResult{0.75, 4, 0.25, {{"bio", TopicRow{0.5, 2}}}};
    report.strong = EvalResult{0.8, 5, 0.0, {}};
    report.delta = 0.05;
    report.config_fingerprint = "deadbeef";

    fs::path path = tmp_dir() / "report.json";
    emit_report(report, path, ReportFormat::json);
    std::string first = read_text_file(path);
    emit_report(report, path, ReportFormat::json);
    CHECK(read_text_file(path) == first);
    CHECK(first.rfind("{\n  \"weak\": {", 0) == 0);  // fixed field order
    CHECK(first.find("\"config_fingerprint\": \"deadbeef\"") != std::string::npos);
    CHECK(first.back() == '\n');

    auto back = read_report_json(path);
    CHECK(back.weak.accuracy == doctest::Approx(0.75));
    CHECK(back.weak.n == 4);
    CHECK(back.weak.abstain_rate == doctest::Approx(0.25));
    REQUIRE(back.weak.per_topic.count("bio") == 1);
    CHECK(back.weak.per_topic.at("bio").n == 2);
    CHECK(back.strong.accuracy == doctest::Approx(0.8));
    CHECK(back.strong.per_topic.empty());
    CHECK(back.delta == doctest::Approx(0.05));
    CHECK(back.config_fingerprint == "deadbeef");

    fs::path junk = tmp_dir() / "junk.json";
    write_text_file(junk, "not json");
    CHECK_THROWS_AS(read_report_json(junk), DataError);
}

TEST_CASE("csv report golden") {
    W2SReport report;
    report.weak = EvalResult{0.75, 4, 0.25, {{"bio", TopicRow{0.5, 2}}}};
    report.strong = EvalResult{0.8, 5, 0.0, {{"chem", TopicRow{1.0, 1}}}};
    report.delta = 0.05;
    report.config_fingerprint = "deadbeef";
    fs::path path = tmp_dir() / "report.csv";
    emit_report(report, path, ReportFormat::csv);
    CHECK(read_text_file(path) ==
          "metric,value,n\n"
          "weak_accuracy,0.750000,4\n"
          "weak_abstain_rate,0.250000,4\n"
          "strong_accuracy,0.800000,5\n"
          "strong_abstain_rate,0.000000,5\n"
          "delta,0.050000,5\n"
          "weak_topic_bio,0.500000,2\n"
          "strong_topic_chem,1.000000,1\n");
}

TEST_CASE("reference results fixture is well-formed and explicitly non-reproduced") {
    fs::path path = fs::path(W2S_REPO_DIR) / "data" / "reference_results.json";
    Json obj = Json::parse(read_text_file(path));
    CHECK(obj.at("reproduced") == false);
    CHECK(obj.at("metric") == "accuracy");
    CHECK(obj.at("note").get<std::string>().find("not") != std::string::npos);
    const Json& tables = obj.at("tables");
    for (const auto& key : {"bagging_supervision", "boosting_supervision",
                            "interaction_oversight", "debate_oversight",
                            "oversight_layer_bagging", "oversight_run_bagging", "icl_oversight",
                            "icl_retrievers"}) {
        CHECK(tables.contains(key));
    }
    // Every numeric leaf is a sane accuracy or a small positive count.
    std::function<void(const Json&)> walk = [&](const Json& node) {
        if (node.is_object() || node.is_array()) {
            for (const auto& child : node) walk(child);
        } else if (node.is_number()) {
            CHECK(node.get<double>() > 0.0);
            CHECK(node.get<double>() <= 100.0);
        }
    };
    walk(tables);
    CHECK(tables["icl_retrievers"].size() == 4);
    for (const auto& [name, value] : tables["icl_retrievers"].items()) {
        CHECK(value.get<double>() > 0.5);
        CHECK(value.get<double>() < 1.0);
    }
}
