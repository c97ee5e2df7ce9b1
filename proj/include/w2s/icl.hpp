#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "w2s/backends.hpp"
#include "w2s/dataset.hpp"
#include "w2s/learners.hpp"
#include "w2s/templates.hpp"

namespace w2s {

struct Shot {
    BinaryPair pair;
    int pseudo_label = 0;
    std::optional<double> confidence;  // in [0,1] when present
};

enum class PromptStyle { basic, confidence };
enum class Retriever { random, bm25, topk, votek };

struct ICLConfig {
    int k = 5;
    PromptStyle style = PromptStyle::basic;
    Retriever retriever = Retriever::random;
    std::uint64_t seed = 0;
    bool similar_first = true;  // retrieved shot order; false puts nearest last
    int max_in_flight = 8;
};

struct RetrieverParams {
    double k1 = 1.5;
    double b = 0.75;
    double rho = 10.0;
    int neighbors = 5;
};

/// Render the shot prompt. Confidence style appends "(Confidence: x.xx)"
/// (two decimals, half-up) to each label line and demands a confidence on
/// every shot.
std::string build_prompt(const std::vector<Shot>& shots, const BinaryPair& query,
                         PromptStyle style, const TemplateSet& templates);

/// Two-decimal half-up confidence rendering, e.g. 0.875 -> "0.88".
std::string format_confidence(double value);

/// Iterative seeded draw without replacement; candidates whose class already
/// holds ceil(k/2) shots are rejected. Output order is draw order.
std::vector<Shot> sample_balanced_shots(const std::vector<Shot>& pool, int k, std::uint64_t seed);

/// Lowercase alphanumeric word tokens.
std::vector<std::string> tokenize(const std::string& text);

struct ScoredId {
    std::string id;
    double score = 0.0;
};

/// Okapi BM25 over (id, text) documents. Descending score, ties by id.
std::vector<ScoredId> bm25_rank(const std::string& query,
                                const std::vector<std::pair<std::string, std::string>>& corpus,
                                const RetrieverParams& params, int topn);

/// Cosine similarity; throws DataError on a zero vector or dim mismatch.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct EmbeddedPoint {
    std::string id;
    std::vector<double> vec;
};

/// Top-k by cosine similarity to the query, descending, ties by id.
std::vector<std::string> topk_retrieve(const std::vector<double>& query_vec,
                                       const std::vector<EmbeddedPoint>& pool, int k);

/// Diversity-aware greedy selection over a directed nearest-neighbor vote
/// graph: each point votes for its `neighbors` nearest; repeatedly pick the
/// candidate maximizing sum over voters v of rho^-(selected among v's
/// neighbors). Ties by id. Returns ids in greedy pick order.
std::vector<std::string> votek_select(const std::vector<EmbeddedPoint>& pool, int k,
                                      const RetrieverParams& params);

/// Parse one prediction. Prefers the backend's first-token scores for "0"
/// and "1" (renormalized); falls back to parsing the first emitted token.
/// nullopt = unparseable output (recorded as abstain upstream).
std::optional<SoftLabel> icl_predict(const BackendResponse& response);

struct ICLPrediction {
    std::string pair_id;
    std::optional<SoftLabel> soft;  // nullopt = parse failure
    std::string prompt;
};

/// Batch ICL over queries: per query pick shots (per retriever/balancing),
/// build the prompt, call the backend, parse. Concurrency is bounded by
/// cfg.max_in_flight; output order matches query order.
std::vector<ICLPrediction> run_icl(const std::vector<BinaryPair>& queries,
                                   const std::vector<Shot>& pool, const ICLConfig& cfg,
                                   const RetrieverParams& params, Backend& backend,
                                   const TemplateSet& templates);

/// Retrieval key text for a pair: question and answer joined by one space.
std::string retrieval_text(const BinaryPair& pair);

}  // namespace w2s
