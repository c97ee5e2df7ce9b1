#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "w2s/common.hpp"
#include "w2s/jsonl.hpp"

using namespace w2s;
namespace fs = std::filesystem;

namespace {
fs::path tmp_dir() {
    fs::path dir = fs::temp_directory_path() / "w2s_jsonl_test";
    fs::create_directories(dir);
    return dir;
}
}  // namespace

TEST_CASE("jsonl_bytes emits one compact object per line") {
    std::vector<Json> rows;
    rows.push_back(Json{{"a", 1}});
    rows.push_back(Json{{"b", "x"}});
    CHECK(jsonl_bytes(rows) == "{\"a\":1}\n{\"b\":\"x\"}\n");
    CHECK(jsonl_bytes({}) == "");
}

TEST_CASE("ordered json keeps insertion order") {
    Json row;
    row["z"] = 1;
    row["a"] = 2;
    CHECK(row.dump() == "{\"z\":1,\"a\":2}");
}

TEST_CASE("write then read roundtrips") {
    fs::path p = tmp_dir() / "roundtrip.jsonl";
    std::vector<Json> rows;
    rows.push_back(Json{{"id", "x"}, {"v", 1.5}});
    rows.push_back(Json{{"id", "y"}, {"v", -2}});
    write_jsonl(p, rows);
    auto back = read_jsonl(p);
    REQUIRE(back.size() == 2);
    CHECK(back[0]["id"] == "x");
    CHECK(back[1]["v"] == -2);
    CHECK(read_text_file(p) == jsonl_bytes(rows));
}

TEST_CASE("parse failures report the 1-based line") {
    fs::path p = tmp_dir() / "bad.jsonl";
    write_text_file(p, "{\"ok\":1}\nnot json\n");
    try {
        read_jsonl(p);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("blank lines are rejected") {
    fs::path p = tmp_dir() / "blank.jsonl";
    write_text_file(p, "{\"a\":1}\n\n{\"b\":2}\n");
    CHECK_THROWS_AS(read_jsonl(p), DataError);
}

TEST_CASE("missing file raises DataError") {
    CHECK_THROWS_AS(read_jsonl(tmp_dir() / "nope.jsonl"), DataError);
    CHECK_THROWS_AS(read_text_file(tmp_dir() / "nope.txt"), DataError);
}

TEST_CASE("empty file reads as zero rows") {
    fs::path p = tmp_dir() / "empty.jsonl";
    write_text_file(p, "");
    CHECK(read_jsonl(p).empty());
}

TEST_CASE("write_text_file creates parent directories") {
    fs::path p = tmp_dir() / "deep" / "nested" / "f.txt";
    write_text_file(p, "hi");
    CHECK(read_text_file(p) == "hi");
    fs::remove_all(tmp_dir() / "deep");
}
