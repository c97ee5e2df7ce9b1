#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "w2s/dataset.hpp"
#include "w2s/jsonl.hpp"

using namespace w2s;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    fs::path dir = fs::temp_directory_path() / "w2s_dataset_test";
    fs::create_directories(dir);
    return dir;
}

fs::path write_raw(const std::string& name, const std::vector<Json>& rows) {
    fs::path p = tmp_dir() / name;
    write_jsonl(p, rows);
    return p;
}

Json question(const std::string& qid, int distractors = 3) {
    Json q;
    q["qid"] = qid;
    q["question"] = "What is " + qid + "?";
    q["correct_answer"] = "right-" + qid;
    Json d = Json::array();
    for (int i = 0; i < distractors; ++i) d.push_back("wrong-" + qid + "-" + std::to_string(i));
    q["distractors"] = d;
    q["topic"] = "t" + std::to_string(qid.size() % 2);
    return q;
}

std::vector<RawQuestion> make_raw(int n) {
    std::vector<Json> rows;
    for (int i = 0; i < n; ++i) rows.push_back(question("q" + std::to_string(i)));
    return ingest_raw(write_raw("gen.jsonl", rows));
}

}  // namespace

TEST_CASE("ingest_raw parses well-formed files") {
    auto raw = make_raw(3);
    REQUIRE(raw.size() == 3);
    CHECK(raw[0].qid == "q0");
    CHECK(raw[0].correct_answer == "right-q0");
    CHECK(raw[0].distractors.size() == 3);
    CHECK(raw[0].topic.has_value());
}

TEST_CASE("ingest_raw rejects malformed rows with the line number") {
    Json bad = question("q0");
    bad.erase("question");
    try {
        ingest_raw(write_raw("noq.jsonl", {question("ok"), bad}));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }

    Json dup = question("q0");
    CHECK_THROWS_AS(ingest_raw(write_raw("dup.jsonl", {question("q0"), dup})), DataError);

    Json empty_d = question("q1");
    empty_d["distractors"] = Json::array();
    CHECK_THROWS_AS(ingest_raw(write_raw("nod.jsonl", {empty_d})), DataError);

    Json overlap = question("q2");
    overlap["distractors"].push_back(overlap["correct_answer"]);
    CHECK_THROWS_AS(ingest_raw(write_raw("ovl.jsonl", {overlap})), DataError);
}

TEST_CASE("to_binary_pairs yields one correct and one distractor pair per question") {
    auto raw = make_raw(10);
    auto pairs = to_binary_pairs(raw, 7);
    REQUIRE(pairs.size() == 20);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& pos = pairs[2 * i];
        const auto& neg = pairs[2 * i + 1];
        CHECK(pos.id == raw[i].qid + ":1");
        CHECK(pos.label == 1);
        CHECK(pos.answer == raw[i].correct_answer);
        CHECK(neg.id == raw[i].qid + ":0");
        CHECK(neg.label == 0);
        bool from_distractors =
            std::find(raw[i].distractors.begin(), raw[i].distractors.end(), neg.answer) !=
            raw[i].distractors.end();
        CHECK(from_distractors);
        CHECK(pos.question == raw[i].question);
        CHECK(pos.topic == raw[i].topic);
    }
}

TEST_CASE("distractor choice is seed-deterministic and seed-sensitive") {
    auto raw = make_raw(20);
    auto a = to_binary_pairs(raw, 7);
    auto b = to_binary_pairs(raw, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].answer == b[i].answer);

    auto c = to_binary_pairs(raw, 8);
    bool any_differ = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_differ = any_differ || a[i].answer != c[i].answer;
    CHECK(any_differ);
}

TEST_CASE("adding questions never perturbs earlier distractor draws") {
    // The draw is keyed per qid, so a grown dataset reproduces old pairs.
    auto small = make_raw(10);
    auto grown = small;
    {
        std::vector<Json> rows;
        for (int i = 0; i < 11; ++i) rows.push_back(question("q" + std::to_string(i)));
        grown = ingest_raw(write_raw("grown.jsonl", rows));
    }
    auto pairs_small = to_binary_pairs(small, 7);
    auto pairs_grown = to_binary_pairs(grown, 7);
    for (std::size_t i = 0; i < pairs_small.size(); ++i) {
        CHECK(pairs_small[i].answer == pairs_grown[i].answer);
    }
}

TEST_CASE("make_splits partitions at question granularity") {
    auto pairs = to_binary_pairs(make_raw(30), 7);
    SplitSizes sizes;
    sizes.train1 = 10;
    sizes.train2 = 10;
    sizes.valid = 5;
    sizes.test = 5;
    auto bundle = make_splits(pairs, sizes, 99);
    CHECK(bundle.train1.size() == 20);
    CHECK(bundle.train2.size() == 20);
    CHECK(bundle.valid.size() == 10);
    CHECK(bundle.test.size() == 10);

    auto qids_of = [](const std::vector<BinaryPair>& split) {
        std::set<std::string> qids;
        for (const auto& p : split) qids.insert(p.qid);
        return qids;
    };
    auto t1 = qids_of(bundle.train1), t2 = qids_of(bundle.train2);
    auto va = qids_of(bundle.valid), te = qids_of(bundle.test);
    CHECK(t1.size() == 10);  // both pairs of a qid land together
    CHECK(va.size() == 5);
    std::set<std::string> all;
    all.insert(t1.begin(), t1.end());
    all.insert(t2.begin(), t2.end());
    all.insert(va.begin(), va.end());
    all.insert(te.begin(), te.end());
    CHECK(all.size() == 30);  // disjoint and exhaustive

    auto again = make_splits(pairs, sizes, 99);
    CHECK(pairs_bytes(again.train1) == pairs_bytes(bundle.train1));
    auto other = make_splits(pairs, sizes, 100);
    CHECK(pairs_bytes(other.train1) != pairs_bytes(bundle.train1));
}

TEST_CASE("make_splits rejects oversubscription") {
    auto pairs = to_binary_pairs(make_raw(5), 7);
    SplitSizes sizes;
    sizes.train1 = 4;
    sizes.train2 = 1;
    sizes.valid = 1;
    sizes.test = 1;  // 7 > 5 questions
    CHECK_THROWS_AS(make_splits(pairs, sizes, 1), DataError);
}

TEST_CASE("pairs serialize with a fixed field order and roundtrip") {
    BinaryPair p;
    p.id = "q1:1";
    p.qid = "q1";
    p.question = "Why?";
    p.answer = "Because.";
    p.label = 1;
    p.topic = "physics";
    CHECK(pairs_bytes({p}) ==
          "{\"id\":\"q1:1\",\"qid\":\"q1\",\"question\":\"Why?\",\"answer\":\"Because.\","
          "\"label\":1,\"topic\":\"physics\"}\n");

    BinaryPair bare = p;
    bare.topic.reset();
    CHECK(pairs_bytes({bare}).find("topic") == std::string::npos);

    fs::path f = tmp_dir() / "pairs.jsonl";
    write_pairs(f, {p, bare});
    auto back = read_pairs(f);
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "q1:1");
    CHECK(back[0].topic == std::optional<std::string>("physics"));
    CHECK_FALSE(back[1].topic.has_value());
}

TEST_CASE("read_pairs validates required fields") {
    fs::path f = tmp_dir() / "badpairs.jsonl";
    write_text_file(f, "{\"id\":\"x\"}\n");
    CHECK_THROWS_AS(read_pairs(f), DataError);
}
