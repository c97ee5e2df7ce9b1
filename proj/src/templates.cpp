#include "w2s/templates.hpp"

#include <algorithm>

#include "w2s/common.hpp"
#include "w2s/jsonl.hpp"

namespace w2s {

namespace {

constexpr const char* kSlotOpen = "[``";
constexpr const char* kSlotClose = "'']";

// The published tables write demo blocks out twice and elide the rest with
// "..."; each table row is split here into header / per-demo / query
// sub-templates so any demo count can be rendered. Spacing quirks of the
// source text (missing space before "Examples", "answer is" run-ons) are
// kept verbatim; the one stray space inside a slot marker is normalized
// since slot syntax must parse.
const std::vector<Template>& builtin_templates() {
    static const std::vector<Template> kTemplates = {
        {"interaction_context_gen",
         "Please provide the background knowledge to answer the following question. Limit your "
         "reply to 30 words.\n"
         "Input: [``question'']\n"
         "Output:"},
        {"knowledge_extract_demo",
         "Question:[``question'']\n"
         "Knowledge: [``knowledge'']"},
        {"knowledge_extract_query",
         "Question:[``question'']\n"
         "Knowledge:"},
        {"knowledge_annotate",
         "Please determine if the following question's answer is correct based on the context. "
         "If it is correct, output \"Yes\". If it is incorrect, output \"No\".\n"
         "Context: [``knowledge'']\n"
         "Input: question:[``question''] answer:[``answer'']\n"
         "Output:"},
        {"debate_initial_header",
         "There is a question followed by an answer. Assuming the answer is [``stance''], please "
         "give your explanation.Examples are given below."},
        {"debate_initial_demo",
         "Input:question:[``question''] answer:[``answer'']\n"
         "Output:[``explanation'']"},
        {"debate_initial_query",
         "Input:question:[``question''] answer:[``answer'']\n"
         "Output:"},
        {"debate_update_header",
         "There is a question followed by an answer. Another agent think the answer is "
         "[``opposing_stance''], and its explanation is given below. Please use its explanation "
         "as additional information to update your explanation.Examples are given below."},
        {"debate_update_demo",
         "Input:question:[``question''] answer:[``answer'']\n"
         "explanation from another agent:[``another_explanation'']\n"
         "Output:[``new_explanation'']"},
        {"debate_update_query",
         "Input:question:[``question''] answer:[``answer'']\n"
         "explanation from another agent:[``another_explanation'']\n"
         "Output:"},
        {"debate_judge",
         "Please read the context first and then determine if the following question's answer is "
         "correct. If it is correct, reply with solely \"Yes\". If it is incorrect, reply with "
         "solely \"No\".\n"
         "Context:One person think it is correct for the reason [``correct_explanation'']\n"
         "Another person think it is incorrect for the reason [``incorrect_explanation'']\n"
         "Input: question:[``question''] answer:[``answer'']\n"
         "Output:"},
        {"icl_basic_header",
         "There is a science knowledge question, followed by an answer. Respond with 1 if the "
         "answer is correct, and with 0 otherwise."},
        {"icl_basic_shot",
         "Q:[``question''] A:[``answer'']\n"
         "[``label'']"},
        {"icl_confidence_header",
         "There is a science knowledge question, followed by an answer. Respond with 1 if the "
         "answer is correct, and with 0 otherwise. Note that there may be errors in the answers "
         "to the contextual examples."},
        {"icl_confidence_shot",
         "Q:[``question''] A:[``answer'']\n"
         "[``label'']. (Confidence: [``confidence''])"},
        {"icl_query", "Q:[``question''] A:[``answer'']"},
    };
    return kTemplates;
}

}  // namespace

std::vector<std::string> template_slots(const std::string& body) {
    std::vector<std::string> slots;
    std::size_t at = 0;
    while (true) {
        std::size_t open = body.find(kSlotOpen, at);
        if (open == std::string::npos) break;
        std::size_t close = body.find(kSlotClose, open);
        if (close == std::string::npos) {
            throw ConfigError("unterminated slot marker at offset " + std::to_string(open));
        }
        std::string name = body.substr(open + 3, close - open - 3);
        if (std::find(slots.begin(), slots.end(), name) == slots.end()) slots.push_back(name);
        at = close + 3;
    }
    return slots;
}

std::string render_template(const std::string& body,
                            const std::map<std::string, std::string>& values) {
    auto slots = template_slots(body);
    for (const auto& [name, _] : values) {
        if (std::find(slots.begin(), slots.end(), name) == slots.end()) {
            throw ConfigError("unknown slot: " + name);
        }
    }
    std::string out;
    out.reserve(body.size());
    std::size_t at = 0;
    while (true) {
        std::size_t open = body.find(kSlotOpen, at);
        if (open == std::string::npos) {
            out.append(body, at, std::string::npos);
            break;
        }
        out.append(body, at, open - at);
        std::size_t close = body.find(kSlotClose, open);
        std::string name = body.substr(open + 3, close - open - 3);
        auto it = values.find(name);
        if (it == values.end()) throw ConfigError("unbound slot: " + name);
        out += it->second;
        at = close + 3;
    }
    return out;
}

TemplateSet TemplateSet::builtin() {
    TemplateSet set;
    for (const auto& t : builtin_templates()) set.put(t);
    return set;
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("template directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    TemplateSet set;
    for (const auto& f : files) {
        std::string body = read_text_file(f);
        if (!body.empty() && body.back() == '\n') body.pop_back();
        set.put(Template{f.stem().string(), std::move(body)});
    }
    return set;
}

void TemplateSet::put(Template t) {
    std::string name = t.name;
    by_name_[name] = std::move(t);
}

const Template& TemplateSet::get(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ConfigError("unknown template: " + name);
    return it->second;
}

std::vector<std::string> TemplateSet::names() const {
    std::vector<std::string> out;
    out.reserve(by_name_.size());
    for (const auto& [name, _] : by_name_) out.push_back(name);
    return out;
}

std::string TemplateSet::render(const std::string& name,
                                const std::map<std::string, std::string>& values) const {
    return render_template(get(name).body, values);
}

void write_builtin_templates(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& t : builtin_templates()) {
        write_text_file(dir / (t.name + ".txt"), t.body + "\n");
    }
}

}  // namespace w2s
