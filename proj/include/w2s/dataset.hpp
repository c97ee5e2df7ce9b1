#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "w2s/common.hpp"

namespace w2s {

/// One multi-choice source record.
struct RawQuestion {
    std::string qid;
    std::string question;
    std::string correct_answer;
    std::vector<std::string> distractors;
    std::optional<std::string> topic;
    std::optional<std::string> support;
};

/// One binary (question, answer) example. Every question yields exactly two:
/// the correct answer with label 1 and one distractor with label 0.
struct BinaryPair {
    std::string id;   // "<qid>:<label>"
    std::string qid;
    std::string question;
    std::string answer;
    int label = 0;
    std::optional<std::string> topic;
};

struct SplitSizes {
    std::size_t train1 = 5000;  // question counts, not pair counts
    std::size_t train2 = 5000;
    std::size_t valid = 1000;
    std::size_t test = 1000;
};

struct SplitBundle {
    std::vector<BinaryPair> train1;
    std::vector<BinaryPair> train2;
    std::vector<BinaryPair> valid;
    std::vector<BinaryPair> test;
};

/// Parse a JSONL file of raw questions. Keys: qid, question, correct_answer,
/// distractors (nonempty array), optional topic, optional support.
/// Malformed lines and duplicate qids raise DataError.
std::vector<RawQuestion> ingest_raw(const std::filesystem::path& path);

/// Convert each question into two pairs: (Q, correct, 1) and (Q, d, 0) with d
/// drawn uniformly from the distractors. The draw for each question uses its
/// own generator keyed by qid, so adding questions never perturbs earlier
/// choices.
std::vector<BinaryPair> to_binary_pairs(const std::vector<RawQuestion>& raw, std::uint64_t seed);

/// Partition pairs into train1/train2/valid/test at question granularity.
/// Both pairs of a qid always land in the same split.
SplitBundle make_splits(const std::vector<BinaryPair>& pairs, const SplitSizes& sizes,
                        std::uint64_t seed);

std::vector<BinaryPair> read_pairs(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const std::vector<BinaryPair>& pairs);
std::string pairs_bytes(const std::vector<BinaryPair>& pairs);

}  // namespace w2s
