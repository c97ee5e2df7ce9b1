#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "w2s/backends.hpp"
#include "w2s/dataset.hpp"
#include "w2s/templates.hpp"

namespace w2s {

struct ContextExample {
    std::string question;
    std::string knowledge;
};

struct TranscriptTurn {
    std::string role;  // "aux", "weak", "aux_a", "aux_b"
    std::string prompt;
    std::string response;
};

struct AnnotationRecord {
    std::string pair_id;
    std::string raw_response;            // final judgement text
    std::optional<int> extracted;        // nullopt = abstain
    std::vector<TranscriptTurn> transcript;
    int run_id = 0;
    bool failed = false;
    std::string error;
    // per-round judgement labels, filled only when judge_each_round is on
    std::vector<std::optional<int>> round_labels;
};

struct DebateTranscript {
    std::string pair_id;
    std::vector<std::pair<std::string, std::string>> rounds;  // (E_A, E_B)
};

struct SOConfig {
    int m = 5;       // context-example pool size
    int n = 1;       // examples per knowledge query
    int rounds = 3;  // debate rounds N
    GenerationParams generation;
    int runs = 1;
    std::uint64_t seed = 0;
    bool judge_each_round = false;
    int max_in_flight = 8;
    double failure_cap = 0.1;  // fraction of failed pairs tolerated
};

/// Rule-based label extraction: trim; if the first word is yes/no
/// (case-insensitive) that decides it; otherwise scan the first line for a
/// standalone yes/no token; otherwise abstain. Total and pure.
std::optional<int> extract_label(const std::string& text);

/// Step 1 of interaction annotation: ask the weak model for background
/// knowledge on m seeded-random questions. Knowledge quality is not checked.
std::vector<ContextExample> generate_context_examples(const std::vector<BinaryPair>& pairs,
                                                      int m, Backend& weak,
                                                      const TemplateSet& templates,
                                                      std::uint64_t seed,
                                                      const GenerationParams& params = {});

/// Step 2: per pair, build a knowledge-extraction prompt with n resampled
/// context examples, query aux for knowledge, then ask the weak model to
/// judge the (question, answer) with that knowledge in context. Per-pair
/// backend failures mark the record failed; more than cfg.failure_cap of
/// the run failing raises FailureCapError.
std::vector<AnnotationRecord> interaction_annotate(const std::vector<BinaryPair>& pairs,
                                                   const std::vector<ContextExample>& examples,
                                                   const SOConfig& cfg, Backend& aux,
                                                   Backend& weak, const TemplateSet& templates);

/// N-round two-agent debate judged by the weak model. Agent A argues the
/// answer is correct, B that it is incorrect; from round 2 each agent sees
/// the opponent's previous explanation. The judge always receives the
/// correct-side explanation in the correct-side slot.
std::pair<std::vector<AnnotationRecord>, std::vector<DebateTranscript>> run_debate(
    const std::vector<BinaryPair>& pairs, const SOConfig& cfg, Backend& aux_a, Backend& aux_b,
    Backend& weak, const TemplateSet& templates);

/// Seeded uniform subsample with exactly per_class records per extracted
/// class. Abstained and failed records are not candidates.
std::vector<AnnotationRecord> balance_labels(const std::vector<AnnotationRecord>& records,
                                             int per_class, std::uint64_t seed);

struct VotedLabel {
    std::string pair_id;
    std::optional<int> label;  // nullopt when every run abstained
    int votes0 = 0;
    int votes1 = 0;
    int abstains = 0;
};

/// Run the annotate procedure R times with seeds seed+1..seed+R and take a
/// hard vote per pair over non-abstain labels.
std::vector<VotedLabel> multi_run_vote(
    const std::function<std::vector<AnnotationRecord>(std::uint64_t seed, int run_id)>& run_fn,
    int runs, std::uint64_t seed);

/// JSONL {pair_id, label, abstain, run_id, transcript_ref} plus a sidecar
/// transcript file; transcript_ref is "<sidecar-name>#<row>".
void write_annotation_records(const std::vector<AnnotationRecord>& records,
                              const std::filesystem::path& records_path,
                              const std::filesystem::path& transcripts_path);
std::vector<AnnotationRecord> read_annotation_records(const std::filesystem::path& records_path,
                                                      const std::filesystem::path& transcripts_path);

}  // namespace w2s
