#include "w2s/oversight.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "w2s/ensemble.hpp"
#include "w2s/jsonl.hpp"
#include "w2s/parallel.hpp"
#include "w2s/rng.hpp"

namespace w2s {

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += c;
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void enforce_failure_cap(const std::vector<AnnotationRecord>& records, double cap) {
    std::size_t failed = 0;
    for (const auto& r : records) failed += r.failed ? 1 : 0;
    if (!records.empty() &&
        static_cast<double>(failed) > cap * static_cast<double>(records.size())) {
        throw FailureCapError(std::to_string(failed) + " of " + std::to_string(records.size()) +
                              " pairs failed, over the " + std::to_string(cap) + " cap");
    }
}

}  // namespace

std::optional<int> extract_label(const std::string& text) {
    // Only the first line matters; responses often continue with rationale.
    std::string first_line = text.substr(0, text.find('\n'));
    auto words = words_of(lower(first_line));
    if (words.empty()) return std::nullopt;
    if (words.front() == "yes") return 1;
    if (words.front() == "no") return 0;
    for (const auto& w : words) {
        if (w == "yes") return 1;
        if (w == "no") return 0;
    }
    return std::nullopt;
}

std::vector<ContextExample> generate_context_examples(const std::vector<BinaryPair>& pairs, int m,
                                                      Backend& weak, const TemplateSet& templates,
                                                      std::uint64_t seed,
                                                      const GenerationParams& params) {
    if (m < 0) throw ConfigError("context example count must be >= 0");
    if (m == 0) return {};
    if (static_cast<std::size_t>(m) > pairs.size()) {
        throw ConfigError("asked for " + std::to_string(m) + " context examples from " +
                          std::to_string(pairs.size()) + " pairs");
    }
    Rng rng(mix_seed(seed, fnv1a64("context_examples")));
    auto picks = rng.sample_indices(pairs.size(), static_cast<std::size_t>(m));
    std::vector<ContextExample> out;
    out.reserve(picks.size());
    for (std::size_t idx : picks) {
        const BinaryPair& pair = pairs[idx];
        std::string prompt =
            templates.render("interaction_context_gen", {{"question", pair.question}});
        try {
            BackendResponse res = weak.generate(prompt, params);
            out.push_back(ContextExample{pair.question, res.text});
        } catch (const BackendError& e) {
            throw BackendError("context example for pair " + pair.id + ": " + e.what());
        }
    }
    return out;
}

namespace {

std::string knowledge_prompt(const std::vector<ContextExample>& examples,
                             const std::vector<std::size_t>& chosen, const std::string& question,
                             const TemplateSet& templates) {
    std::string prompt;
    for (std::size_t idx : chosen) {
        prompt += templates.render("knowledge_extract_demo",
                                   {{"question", examples[idx].question},
                                    {"knowledge", examples[idx].knowledge}});
        prompt += '\n';
    }
    prompt += templates.render("knowledge_extract_query", {{"question", question}});
    return prompt;
}

}  // namespace

std::vector<AnnotationRecord> interaction_annotate(const std::vector<BinaryPair>& pairs,
                                                   const std::vector<ContextExample>& examples,
                                                   const SOConfig& cfg, Backend& aux,
                                                   Backend& weak, const TemplateSet& templates) {
    if (cfg.n < 0) throw ConfigError("context examples per query must be >= 0");
    if (cfg.n > 0 && examples.empty()) {
        throw ConfigError("n > 0 but the context example set is empty");
    }
    if (static_cast<std::size_t>(cfg.n) > examples.size()) {
        throw ConfigError("n exceeds the context example pool");
    }

    std::vector<AnnotationRecord> records(pairs.size());
    parallel_for(pairs.size(), cfg.max_in_flight, [&](std::size_t i) {
        const BinaryPair& pair = pairs[i];
        AnnotationRecord& rec = records[i];
        rec.pair_id = pair.id;
        // All per-pair randomness is keyed by pair id: annotation of one
        // pair is unaffected by which other pairs are in the batch.
        Rng rng(mix_seed(cfg.seed, fnv1a64(pair.id)));
        std::vector<std::size_t> chosen;
        if (cfg.n > 0) {
            chosen = rng.sample_indices(examples.size(), static_cast<std::size_t>(cfg.n));
        }
        try {
            std::string k_prompt = knowledge_prompt(examples, chosen, pair.question, templates);
            BackendResponse k_res = aux.generate(k_prompt, cfg.generation);
            rec.transcript.push_back(TranscriptTurn{"aux", k_prompt, k_res.text});

            std::string a_prompt = templates.render("knowledge_annotate",
                                                    {{"knowledge", k_res.text},
                                                     {"question", pair.question},
                                                     {"answer", pair.answer}});
            BackendResponse a_res = weak.generate(a_prompt, cfg.generation);
            rec.transcript.push_back(TranscriptTurn{"weak", a_prompt, a_res.text});
            rec.raw_response = a_res.text;
            rec.extracted = extract_label(a_res.text);
        } catch (const BackendError& e) {
            rec.failed = true;
            rec.error = e.what();
        }
    });
    enforce_failure_cap(records, cfg.failure_cap);
    return records;
}

std::pair<std::vector<AnnotationRecord>, std::vector<DebateTranscript>> run_debate(
    const std::vector<BinaryPair>& pairs, const SOConfig& cfg, Backend& aux_a, Backend& aux_b,
    Backend& weak, const TemplateSet& templates) {
    if (cfg.rounds < 1) throw ConfigError("debate needs at least one round");

    std::vector<AnnotationRecord> records(pairs.size());
    std::vector<DebateTranscript> transcripts(pairs.size());

    parallel_for(pairs.size(), cfg.max_in_flight, [&](std::size_t i) {
        const BinaryPair& pair = pairs[i];
        AnnotationRecord& rec = records[i];
        DebateTranscript& dt = transcripts[i];
        rec.pair_id = pair.id;
        dt.pair_id = pair.id;

        const std::map<std::string, std::string> qa = {{"question", pair.question},
                                                       {"answer", pair.answer}};
        try {
            std::string ea, eb;
            for (int round = 1; round <= cfg.rounds; ++round) {
                std::string prompt_a, prompt_b;
                if (round == 1) {
                    // A argues the answer is correct, B that it is incorrect.
                    prompt_a = templates.render("debate_initial_header", {{"stance", "correct"}}) +
                               "\n" + templates.render("debate_initial_query", qa);
                    prompt_b =
                        templates.render("debate_initial_header", {{"stance", "incorrect"}}) +
                        "\n" + templates.render("debate_initial_query", qa);
                } else {
                    prompt_a = templates.render("debate_update_header",
                                                {{"opposing_stance", "incorrect"}}) +
                               "\n" +
                               templates.render("debate_update_query",
                                                {{"question", pair.question},
                                                 {"answer", pair.answer},
                                                 {"another_explanation", eb}});
                    prompt_b = templates.render("debate_update_header",
                                                {{"opposing_stance", "correct"}}) +
                               "\n" +
                               templates.render("debate_update_query",
                                                {{"question", pair.question},
                                                 {"answer", pair.answer},
                                                 {"another_explanation", ea}});
                }
                BackendResponse res_a = aux_a.generate(prompt_a, cfg.generation);
                std::string next_ea = res_a.text;
                rec.transcript.push_back(TranscriptTurn{"aux_a", prompt_a, next_ea});
                BackendResponse res_b = aux_b.generate(prompt_b, cfg.generation);
                std::string next_eb = res_b.text;
                rec.transcript.push_back(TranscriptTurn{"aux_b", prompt_b, next_eb});
                ea = next_ea;
                eb = next_eb;
                dt.rounds.emplace_back(ea, eb);

                const bool last = round == cfg.rounds;
                if (last || cfg.judge_each_round) {
                    // A argued correct, so its explanation fills the
                    // correct-side slot no matter how the debate went.
                    std::string j_prompt = templates.render("debate_judge",
                                                            {{"correct_explanation", ea},
                                                             {"incorrect_explanation", eb},
                                                             {"question", pair.question},
                                                             {"answer", pair.answer}});
                    BackendResponse j_res = weak.generate(j_prompt, cfg.generation);
                    rec.transcript.push_back(TranscriptTurn{"weak", j_prompt, j_res.text});
                    std::optional<int> label = extract_label(j_res.text);
                    if (cfg.judge_each_round) rec.round_labels.push_back(label);
                    if (last) {
                        rec.raw_response = j_res.text;
                        rec.extracted = label;
                    }
                }
            }
        } catch (const BackendError& e) {
            rec.failed = true;
            rec.error = e.what();
        }
    });
    enforce_failure_cap(records, cfg.failure_cap);
    return {std::move(records), std::move(transcripts)};
}

std::vector<AnnotationRecord> balance_labels(const std::vector<AnnotationRecord>& records,
                                             int per_class, std::uint64_t seed) {
    if (per_class < 0) throw ConfigError("per_class must be >= 0");
    if (per_class == 0) return {};
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.failed || !r.extracted) continue;
        by_class[*r.extracted].push_back(i);
    }
    for (int cls : {0, 1}) {
        if (by_class[cls].size() < static_cast<std::size_t>(per_class)) {
            throw DataError("class " + std::to_string(cls) + " has " +
                            std::to_string(by_class[cls].size()) + " records, need " +
                            std::to_string(per_class));
        }
    }
    Rng rng(mix_seed(seed, fnv1a64("balance_labels")));
    std::vector<AnnotationRecord> out;
    out.reserve(2 * static_cast<std::size_t>(per_class));
    for (int cls : {0, 1}) {
        for (std::size_t idx :
             rng.sample_indices(by_class[cls].size(), static_cast<std::size_t>(per_class))) {
            out.push_back(records[by_class[cls][idx]]);
        }
    }
    return out;
}

std::vector<VotedLabel> multi_run_vote(
    const std::function<std::vector<AnnotationRecord>(std::uint64_t seed, int run_id)>& run_fn,
    int runs, std::uint64_t seed) {
    if (runs < 1) throw ConfigError("multi_run_vote needs runs >= 1");
    std::vector<VotedLabel> tally;
    std::unordered_map<std::string, std::size_t> index;
    for (int r = 1; r <= runs; ++r) {
        auto records = run_fn(seed + static_cast<std::uint64_t>(r), r);
        for (const auto& rec : records) {
            auto [it, fresh] = index.try_emplace(rec.pair_id, tally.size());
            if (fresh) tally.push_back(VotedLabel{rec.pair_id, std::nullopt, 0, 0, 0});
            VotedLabel& vl = tally[it->second];
            if (rec.failed || !rec.extracted) {
                ++vl.abstains;
            } else if (*rec.extracted == 1) {
                ++vl.votes1;
            } else {
                ++vl.votes0;
            }
        }
    }
    for (auto& vl : tally) {
        if (vl.votes0 + vl.votes1 == 0) continue;  // label stays nullopt
        std::vector<int> ballot;
        ballot.insert(ballot.end(), static_cast<std::size_t>(vl.votes0), 0);
        ballot.insert(ballot.end(), static_cast<std::size_t>(vl.votes1), 1);
        vl.label = hard_vote(ballot);
    }
    return tally;
}

void write_annotation_records(const std::vector<AnnotationRecord>& records,
                              const std::filesystem::path& records_path,
                              const std::filesystem::path& transcripts_path) {
    std::vector<Json> rows;
    std::vector<Json> sidecar;
    rows.reserve(records.size());
    sidecar.reserve(records.size());
    const std::string sidecar_name = transcripts_path.filename().string();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        Json row;
        row["pair_id"] = rec.pair_id;
        row["label"] = rec.extracted ? Json(*rec.extracted) : Json(nullptr);
        row["abstain"] = !rec.extracted.has_value();
        row["run_id"] = rec.run_id;
        row["transcript_ref"] = sidecar_name + "#" + std::to_string(i);
        row["raw_response"] = rec.raw_response;
        if (rec.failed) {
            row["failed"] = true;
            row["error"] = rec.error;
        }
        if (!rec.round_labels.empty()) {
            Json labels = Json::array();
            for (const auto& l : rec.round_labels) labels.push_back(l ? Json(*l) : Json(nullptr));
            row["round_labels"] = std::move(labels);
        }
        rows.push_back(std::move(row));

        Json t;
        t["pair_id"] = rec.pair_id;
        Json turns = Json::array();
        for (const auto& turn : rec.transcript) {
            turns.push_back(Json{{"role", turn.role}, {"prompt", turn.prompt},
                                 {"response", turn.response}});
        }
        t["turns"] = std::move(turns);
        sidecar.push_back(std::move(t));
    }
    write_jsonl(records_path, rows);
    write_jsonl(transcripts_path, sidecar);
}

std::vector<AnnotationRecord> read_annotation_records(
    const std::filesystem::path& records_path, const std::filesystem::path& transcripts_path) {
    auto rows = read_jsonl(records_path);
    auto sidecar = read_jsonl(transcripts_path);
    std::vector<AnnotationRecord> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = records_path.string() + ":" + std::to_string(i + 1);
        AnnotationRecord rec;
        if (!row.contains("pair_id") || !row["pair_id"].is_string()) {
            throw DataError(where + ": missing pair_id");
        }
        rec.pair_id = row["pair_id"].get<std::string>();
        if (row.contains("label") && row["label"].is_number_integer()) {
            rec.extracted = row["label"].get<int>();
        }
        if (row.contains("run_id")) rec.run_id = row["run_id"].get<int>();
        if (row.contains("raw_response") && row["raw_response"].is_string()) {
            rec.raw_response = row["raw_response"].get<std::string>();
        }
        if (row.contains("failed")) rec.failed = row["failed"].get<bool>();
        if (row.contains("error") && row["error"].is_string()) {
            rec.error = row["error"].get<std::string>();
        }
        if (row.contains("round_labels") && row["round_labels"].is_array()) {
            for (const auto& l : row["round_labels"]) {
                rec.round_labels.push_back(l.is_number_integer()
                                               ? std::optional<int>(l.get<int>())
                                               : std::nullopt);
            }
        }
        if (row.contains("transcript_ref") && row["transcript_ref"].is_string()) {
            std::string ref = row["transcript_ref"].get<std::string>();
            std::size_t hash = ref.rfind('#');
            if (hash != std::string::npos) {
                std::size_t idx = std::stoul(ref.substr(hash + 1));
                if (idx >= sidecar.size()) throw DataError(where + ": transcript_ref out of range");
                const Json& t = sidecar[idx];
                if (t["pair_id"].get<std::string>() != rec.pair_id) {
                    throw DataError(where + ": transcript pair_id mismatch");
                }
                for (const auto& turn : t["turns"]) {
                    rec.transcript.push_back(TranscriptTurn{turn["role"].get<std::string>(),
                                                            turn["prompt"].get<std::string>(),
                                                            turn["response"].get<std::string>()});
                }
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace w2s
