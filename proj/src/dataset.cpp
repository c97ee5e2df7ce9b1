#include "w2s/dataset.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "w2s/jsonl.hpp"
#include "w2s/rng.hpp"

namespace w2s {

namespace {

std::string require_string_field(const Json& row, const char* key, const std::string& where) {
    if (!row.contains(key) || !row[key].is_string()) {
        throw DataError(where + ": missing or non-string field \"" + key + "\"");
    }
    std::string v = row[key].get<std::string>();
    if (v.empty()) throw DataError(where + ": empty field \"" + key + "\"");
    return v;
}

}  // namespace

std::vector<RawQuestion> ingest_raw(const std::filesystem::path& path) {
    auto rows = read_jsonl(path);
    std::vector<RawQuestion> out;
    out.reserve(rows.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = path.string() + ":" + std::to_string(i + 1);
        if (!row.is_object()) throw DataError(where + ": not an object");
        RawQuestion q;
        q.qid = require_string_field(row, "qid", where);
        q.question = require_string_field(row, "question", where);
        q.correct_answer = require_string_field(row, "correct_answer", where);
        if (!row.contains("distractors") || !row["distractors"].is_array() ||
            row["distractors"].empty()) {
            throw DataError(where + ": \"distractors\" must be a nonempty array");
        }
        for (const auto& d : row["distractors"]) {
            if (!d.is_string()) throw DataError(where + ": non-string distractor");
            q.distractors.push_back(d.get<std::string>());
            if (q.distractors.back() == q.correct_answer) {
                throw DataError(where + ": correct answer listed among distractors");
            }
        }
        if (row.contains("topic") && row["topic"].is_string()) {
            q.topic = row["topic"].get<std::string>();
        }
        if (row.contains("support") && row["support"].is_string()) {
            q.support = row["support"].get<std::string>();
        }
        if (!seen.insert(q.qid).second) throw DataError(where + ": duplicate qid \"" + q.qid + "\"");
        out.push_back(std::move(q));
    }
    return out;
}

std::vector<BinaryPair> to_binary_pairs(const std::vector<RawQuestion>& raw, std::uint64_t seed) {
    std::vector<BinaryPair> out;
    out.reserve(raw.size() * 2);
    for (const auto& q : raw) {
        if (q.distractors.empty()) {
            throw DataError("question \"" + q.qid + "\" has no distractors");
        }
        // Generator keyed by qid: the distractor choice for one question
        // never depends on how many questions precede it.
        Rng rng(mix_seed(seed, fnv1a64(q.qid)));
        const std::string& wrong = q.distractors[rng.below(q.distractors.size())];

        BinaryPair pos;
        pos.qid = q.qid;
        pos.id = q.qid + ":1";
        pos.question = q.question;
        pos.answer = q.correct_answer;
        pos.label = 1;
        pos.topic = q.topic;
        out.push_back(std::move(pos));

        BinaryPair neg;
        neg.qid = q.qid;
        neg.id = q.qid + ":0";
        neg.question = q.question;
        neg.answer = wrong;
        neg.label = 0;
        neg.topic = q.topic;
        out.push_back(std::move(neg));
    }
    return out;
}

SplitBundle make_splits(const std::vector<BinaryPair>& pairs, const SplitSizes& sizes,
                        std::uint64_t seed) {
    // Collect qids in first-appearance order, then shuffle at question level.
    std::vector<std::string> qids;
    std::unordered_set<std::string> seen;
    for (const auto& p : pairs) {
        if (seen.insert(p.qid).second) qids.push_back(p.qid);
    }
    std::size_t need = sizes.train1 + sizes.train2 + sizes.valid + sizes.test;
    if (qids.size() < need) {
        throw DataError("need " + std::to_string(need) + " questions, have " +
                        std::to_string(qids.size()));
    }
    Rng rng(mix_seed(seed, fnv1a64("make_splits")));
    rng.shuffle(qids);

    enum Dest { kTrain1, kTrain2, kValid, kTest, kUnused };
    std::unordered_map<std::string, Dest> dest;
    std::size_t at = 0;
    for (std::size_t i = 0; i < sizes.train1; ++i) dest[qids[at++]] = kTrain1;
    for (std::size_t i = 0; i < sizes.train2; ++i) dest[qids[at++]] = kTrain2;
    for (std::size_t i = 0; i < sizes.valid; ++i) dest[qids[at++]] = kValid;
    for (std::size_t i = 0; i < sizes.test; ++i) dest[qids[at++]] = kTest;

    SplitBundle bundle;
    for (const auto& p : pairs) {
        auto it = dest.find(p.qid);
        if (it == dest.end()) continue;
        switch (it->second) {
            case kTrain1: bundle.train1.push_back(p); break;
            case kTrain2: bundle.train2.push_back(p); break;
            case kValid: bundle.valid.push_back(p); break;
            case kTest: bundle.test.push_back(p); break;
            default: break;
        }
    }
    return bundle;
}

namespace {

Json pair_to_json(const BinaryPair& p) {
    Json row;
    row["id"] = p.id;
    row["qid"] = p.qid;
    row["question"] = p.question;
    row["answer"] = p.answer;
    row["label"] = p.label;
    if (p.topic) row["topic"] = *p.topic;
    return row;
}

BinaryPair pair_from_json(const Json& row, const std::string& where) {
    BinaryPair p;
    p.id = require_string_field(row, "id", where);
    p.qid = require_string_field(row, "qid", where);
    p.question = require_string_field(row, "question", where);
    p.answer = require_string_field(row, "answer", where);
    if (!row.contains("label") || !row["label"].is_number_integer()) {
        throw DataError(where + ": missing integer \"label\"");
    }
    p.label = row["label"].get<int>();
    if (p.label != 0 && p.label != 1) throw DataError(where + ": label must be 0 or 1");
    if (row.contains("topic") && row["topic"].is_string()) {
        p.topic = row["topic"].get<std::string>();
    }
    return p;
}

}  // namespace

std::vector<BinaryPair> read_pairs(const std::filesystem::path& path) {
    auto rows = read_jsonl(path);
    std::vector<BinaryPair> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.push_back(pair_from_json(rows[i], path.string() + ":" + std::to_string(i + 1)));
    }
    return out;
}

std::string pairs_bytes(const std::vector<BinaryPair>& pairs) {
    std::vector<Json> rows;
    rows.reserve(pairs.size());
    for (const auto& p : pairs) rows.push_back(pair_to_json(p));
    return jsonl_bytes(rows);
}

void write_pairs(const std::filesystem::path& path, const std::vector<BinaryPair>& pairs) {
    write_text_file(path, pairs_bytes(pairs));
}

}  // namespace w2s
