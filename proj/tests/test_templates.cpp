#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "w2s/common.hpp"
#include "w2s/jsonl.hpp"
#include "w2s/templates.hpp"

using namespace w2s;
namespace fs = std::filesystem;

TEST_CASE("template_slots finds names in first-appearance order") {
    auto slots = template_slots("x [``a''] y [``b''] z [``a'']");
    REQUIRE(slots.size() == 2);
    CHECK(slots[0] == "a");
    CHECK(slots[1] == "b");
    CHECK(template_slots("no slots here").empty());
    CHECK_THROWS_AS(template_slots("broken [``a"), ConfigError);
}

TEST_CASE("render substitutes every occurrence") {
    CHECK(render_template("[``x''] and [``x'']", {{"x", "A"}}) == "A and A");
    CHECK(render_template("q: [``q''] a: [``a'']", {{"q", "Q1"}, {"a", "A1"}}) ==
          "q: Q1 a: A1");
}

TEST_CASE("render rejects unknown and unbound slots by name") {
    try {
        render_template("[``a'']", {{"a", "x"}, {"typo", "y"}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("typo") != std::string::npos);
    }
    try {
        render_template("[``a''] [``b'']", {{"a", "x"}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
}

TEST_CASE("builtin set carries all sixteen templates") {
    TemplateSet set = TemplateSet::builtin();
    const char* expected[] = {
        "interaction_context_gen", "knowledge_extract_demo", "knowledge_extract_query",
        "knowledge_annotate",      "debate_initial_header",  "debate_initial_demo",
        "debate_initial_query",    "debate_update_header",   "debate_update_demo",
        "debate_update_query",     "debate_judge",           "icl_basic_header",
        "icl_basic_shot",          "icl_confidence_header",  "icl_confidence_shot",
        "icl_query",
    };
    for (const char* name : expected) CHECK(set.contains(name));
    CHECK(set.names().size() == 16);
    CHECK_THROWS_AS(set.get("nonexistent"), ConfigError);
}

TEST_CASE("key prompt bodies match the published text verbatim") {
    TemplateSet set = TemplateSet::builtin();
    CHECK(set.get("interaction_context_gen").body ==
          "Please provide the background knowledge to answer the following question. Limit your "
          "reply to 30 words.\nInput: [``question'']\nOutput:");
    CHECK(set.get("knowledge_extract_query").body == "Question:[``question'']\nKnowledge:");
    CHECK(set.get("icl_query").body == "Q:[``question''] A:[``answer'']");
    // quirks of the source text survive verbatim
    CHECK(set.get("debate_initial_header").body.find("explanation.Examples are given below") !=
          std::string::npos);
    CHECK(set.get("debate_judge").body.find("Context:One person think") != std::string::npos);
    CHECK(set.get("knowledge_annotate").body.find("output \"Yes\"") != std::string::npos);
}

TEST_CASE("rendered judge prompt carries both explanations") {
    TemplateSet set = TemplateSet::builtin();
    std::string prompt = set.render("debate_judge", {{"correct_explanation", "EA"},
                                                     {"incorrect_explanation", "EB"},
                                                     {"question", "Q"},
                                                     {"answer", "A"}});
    CHECK(prompt.find("correct for the reason EA") != std::string::npos);
    CHECK(prompt.find("incorrect for the reason EB") != std::string::npos);
    CHECK(prompt.find("question:Q answer:A") != std::string::npos);
}

TEST_CASE("write then load_dir roundtrips the builtin set") {
    fs::path dir = fs::temp_directory_path() / "w2s_templates_test";
    fs::remove_all(dir);
    write_builtin_templates(dir);
    TemplateSet loaded = TemplateSet::load_dir(dir);
    TemplateSet builtin = TemplateSet::builtin();
    REQUIRE(loaded.names() == builtin.names());
    for (const auto& name : builtin.names()) {
        CHECK(loaded.get(name).body == builtin.get(name).body);
    }
    fs::remove_all(dir);
}

TEST_CASE("the repo templates directory matches the builtin bodies") {
    TemplateSet repo = TemplateSet::load_dir(fs::path(W2S_REPO_DIR) / "templates");
    TemplateSet builtin = TemplateSet::builtin();
    REQUIRE(repo.names() == builtin.names());
    for (const auto& name : builtin.names()) {
        CHECK(repo.get(name).body == builtin.get(name).body);
    }
}

TEST_CASE("load_dir names by stem and strips one trailing newline") {
    fs::path dir = fs::temp_directory_path() / "w2s_templates_dir";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text_file(dir / "one.txt", "hello\n");
    write_text_file(dir / "two.txt", "body\n\n");
    write_text_file(dir / "ignored.json", "{}");
    TemplateSet set = TemplateSet::load_dir(dir);
    CHECK(set.names() == std::vector<std::string>{"one", "two"});
    CHECK(set.get("one").body == "hello");
    CHECK(set.get("two").body == "body\n");
    CHECK_THROWS_AS(TemplateSet::load_dir(dir / "missing"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("custom template overrides flow through a set") {
    TemplateSet set = TemplateSet::builtin();
    set.put(Template{"icl_query", "Ask: [``question''] / [``answer'']"});
    CHECK(set.render("icl_query", {{"question", "q"}, {"answer", "a"}}) == "Ask: q / a");
}
