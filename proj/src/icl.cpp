#include "w2s/icl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "w2s/parallel.hpp"
#include "w2s/rng.hpp"

namespace w2s {

std::string format_confidence(double value) {
    if (value < 0.0 || value > 1.0) throw DataError("confidence outside [0, 1]");
    // Two decimals, half-up. Integer cents avoid printf rounding modes.
    int cents = static_cast<int>(std::floor(value * 100.0 + 0.5));
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%d.%02d", cents / 100, cents % 100);
    return buf;
}

std::string build_prompt(const std::vector<Shot>& shots, const BinaryPair& query,
                         PromptStyle style, const TemplateSet& templates) {
    const bool with_confidence = style == PromptStyle::confidence;
    std::string prompt =
        templates.get(with_confidence ? "icl_confidence_header" : "icl_basic_header").body;
    for (const auto& shot : shots) {
        prompt += '\n';
        if (with_confidence) {
            if (!shot.confidence) {
                throw ConfigError("confidence-style prompt but shot " + shot.pair.id +
                                  " has no confidence");
            }
            prompt += templates.render("icl_confidence_shot",
                                       {{"question", shot.pair.question},
                                        {"answer", shot.pair.answer},
                                        {"label", std::to_string(shot.pseudo_label)},
                                        {"confidence", format_confidence(*shot.confidence)}});
        } else {
            prompt += templates.render("icl_basic_shot",
                                       {{"question", shot.pair.question},
                                        {"answer", shot.pair.answer},
                                        {"label", std::to_string(shot.pseudo_label)}});
        }
    }
    prompt += '\n';
    prompt += templates.render("icl_query",
                               {{"question", query.question}, {"answer", query.answer}});
    return prompt;
}

std::vector<Shot> sample_balanced_shots(const std::vector<Shot>& pool, int k,
                                        std::uint64_t seed) {
    if (k < 0) throw ConfigError("shot count must be >= 0");
    if (k == 0) return {};
    const int cap = (k + 1) / 2;  // per-class ceiling for two classes
    Rng rng(mix_seed(seed, fnv1a64("balanced_shots")));
    std::vector<std::size_t> candidates(pool.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
    std::vector<Shot> out;
    int count[2] = {0, 0};
    // Iterative rejection: a draw whose class is full is discarded and the
    // draw simply repeats on the shrunken pool.
    while (out.size() < static_cast<std::size_t>(k)) {
        if (candidates.empty()) {
            throw DataError("cannot draw " + std::to_string(k) + " balanced shots from " +
                            std::to_string(pool.size()));
        }
        std::size_t at = static_cast<std::size_t>(rng.below(candidates.size()));
        const Shot& shot = pool[candidates[at]];
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(at));
        if (shot.pseudo_label != 0 && shot.pseudo_label != 1) {
            throw DataError("shot " + shot.pair.id + " has non-binary pseudo label");
        }
        if (count[shot.pseudo_label] >= cap) continue;
        ++count[shot.pseudo_label];
        out.push_back(shot);
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<ScoredId> bm25_rank(const std::string& query,
                                const std::vector<std::pair<std::string, std::string>>& corpus,
                                const RetrieverParams& params, int topn) {
    if (corpus.empty()) throw DataError("bm25: empty corpus");
    if (params.k1 <= 0.0 || params.b < 0.0 || params.b > 1.0) {
        throw ConfigError("bm25: k1 > 0 and b in [0, 1] required");
    }
    const std::size_t n_docs = corpus.size();
    std::vector<std::unordered_map<std::string, double>> tf(n_docs);
    std::vector<double> dl(n_docs, 0.0);
    std::unordered_map<std::string, std::size_t> df;
    for (std::size_t d = 0; d < n_docs; ++d) {
        auto tokens = tokenize(corpus[d].second);
        dl[d] = static_cast<double>(tokens.size());
        for (const auto& t : tokens) {
            if (tf[d][t] == 0.0) ++df[t];
            tf[d][t] += 1.0;
        }
    }
    double avgdl = 0.0;
    for (double len : dl) avgdl += len;
    avgdl /= static_cast<double>(n_docs);

    // Distinct query terms; repeats in the query do not double-count.
    std::vector<std::string> terms;
    {
        std::set<std::string> seen;
        for (const auto& t : tokenize(query)) {
            if (seen.insert(t).second) terms.push_back(t);
        }
    }

    std::vector<ScoredId> scored;
    scored.reserve(n_docs);
    for (std::size_t d = 0; d < n_docs; ++d) {
        double score = 0.0;
        for (const auto& t : terms) {
            auto it = tf[d].find(t);
            if (it == tf[d].end()) continue;
            const double f = it->second;
            const double n_t = static_cast<double>(df[t]);
            const double idf =
                std::log((static_cast<double>(n_docs) - n_t + 0.5) / (n_t + 0.5) + 1.0);
            const double denom =
                f + params.k1 * (1.0 - params.b + (avgdl > 0.0 ? params.b * dl[d] / avgdl : 0.0));
            score += idf * f * (params.k1 + 1.0) / denom;
        }
        scored.push_back(ScoredId{corpus[d].first, score});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (topn >= 0 && static_cast<std::size_t>(topn) < scored.size()) {
        scored.resize(static_cast<std::size_t>(topn));
    }
    return scored;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw DataError("cosine: zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::string> topk_retrieve(const std::vector<double>& query_vec,
                                       const std::vector<EmbeddedPoint>& pool, int k) {
    if (k < 0) throw ConfigError("topk: k must be >= 0");
    std::vector<std::pair<double, std::string>> scored;
    scored.reserve(pool.size());
    for (const auto& p : pool) scored.emplace_back(cosine(query_vec, p.vec), p.id);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (const auto& [_, id] : scored) {
        if (out.size() == static_cast<std::size_t>(k)) break;
        out.push_back(id);
    }
    return out;
}

std::vector<std::string> votek_select(const std::vector<EmbeddedPoint>& pool, int k,
                                      const RetrieverParams& params) {
    if (k < 0 || static_cast<std::size_t>(k) > pool.size()) {
        throw ConfigError("votek: need 0 <= k <= pool size");
    }
    if (params.rho <= 1.0) throw ConfigError("votek: rho must be > 1");
    const std::size_t n = pool.size();

    // Index order must not matter: rank candidates by (similarity, id).
    std::vector<std::set<std::size_t>> nn(n);       // i -> its nearest neighbors
    std::vector<std::vector<std::size_t>> voters(n);  // c -> points voting for c
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> ranked;
        ranked.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) ranked.emplace_back(cosine(pool[i].vec, pool[j].vec), j);
        }
        std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return pool[a.second].id < pool[b.second].id;
        });
        const std::size_t take = std::min<std::size_t>(ranked.size(),
                                                       static_cast<std::size_t>(params.neighbors));
        for (std::size_t r = 0; r < take; ++r) {
            nn[i].insert(ranked[r].second);
            voters[ranked[r].second].push_back(i);
        }
    }

    std::vector<char> selected(n, 0);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int step = 0; step < k; ++step) {
        double best_score = -1.0;
        std::size_t best = n;
        for (std::size_t c = 0; c < n; ++c) {
            if (selected[c]) continue;
            double score = 0.0;
            for (std::size_t v : voters[c]) {
                std::size_t overlap = 0;
                for (std::size_t x : nn[v]) overlap += selected[x] ? 1 : 0;
                score += std::pow(params.rho, -static_cast<double>(overlap));
            }
            if (best == n || score > best_score ||
                (score == best_score && pool[c].id < pool[best].id)) {
                best_score = score;
                best = c;
            }
        }
        selected[best] = 1;
        out.push_back(pool[best].id);
    }
    return out;
}

std::optional<SoftLabel> icl_predict(const BackendResponse& response) {
    auto p0 = response.token_scores.find("0");
    auto p1 = response.token_scores.find("1");
    if (p0 != response.token_scores.end() || p1 != response.token_scores.end()) {
        double s0 = p0 != response.token_scores.end() ? p0->second : 0.0;
        double s1 = p1 != response.token_scores.end() ? p1->second : 0.0;
        if (s0 + s1 > 0.0) {
            return SoftLabel{s0 / (s0 + s1), s1 / (s0 + s1)};
        }
    }
    auto tokens = tokenize(response.text);
    if (tokens.empty()) return std::nullopt;
    if (tokens.front() == "0") return SoftLabel{1.0, 0.0};
    if (tokens.front() == "1") return SoftLabel{0.0, 1.0};
    return std::nullopt;
}

std::string retrieval_text(const BinaryPair& pair) { return pair.question + " " + pair.answer; }

std::vector<ICLPrediction> run_icl(const std::vector<BinaryPair>& queries,
                                   const std::vector<Shot>& pool, const ICLConfig& cfg,
                                   const RetrieverParams& params, Backend& backend,
                                   const TemplateSet& templates) {
    if (pool.empty()) throw DataError("run_icl: empty shot pool");
    std::unordered_map<std::string, std::size_t> shot_by_id;
    for (std::size_t i = 0; i < pool.size(); ++i) shot_by_id[pool[i].pair.id] = i;
    if (shot_by_id.size() != pool.size()) throw DataError("run_icl: duplicate shot ids");

    // Query-independent preparation per retriever.
    std::vector<std::pair<std::string, std::string>> corpus;
    std::vector<EmbeddedPoint> embedded;
    std::vector<Shot> fixed_shots;  // votek picks one diverse set for all queries
    switch (cfg.retriever) {
        case Retriever::random:
            break;
        case Retriever::bm25:
            corpus.reserve(pool.size());
            for (const auto& s : pool) corpus.emplace_back(s.pair.id, retrieval_text(s.pair));
            break;
        case Retriever::topk:
        case Retriever::votek:
            embedded.reserve(pool.size());
            for (const auto& s : pool) {
                embedded.push_back(EmbeddedPoint{s.pair.id, backend.embed(retrieval_text(s.pair))});
            }
            if (cfg.retriever == Retriever::votek) {
                for (const auto& id : votek_select(embedded, cfg.k, params)) {
                    fixed_shots.push_back(pool[shot_by_id.at(id)]);
                }
            }
            break;
    }

    auto order_shots = [&](std::vector<std::string> ids) {
        if (!cfg.similar_first) std::reverse(ids.begin(), ids.end());
        std::vector<Shot> shots;
        shots.reserve(ids.size());
        for (const auto& id : ids) shots.push_back(pool[shot_by_id.at(id)]);
        return shots;
    };

    GenerationParams gen;
    gen.temperature = 0.0;
    gen.max_tokens = 8;
    gen.want_token_scores = true;

    std::vector<ICLPrediction> out(queries.size());
    parallel_for(queries.size(), cfg.max_in_flight, [&](std::size_t i) {
        const BinaryPair& query = queries[i];
        std::vector<Shot> shots;
        switch (cfg.retriever) {
            case Retriever::random:
                shots = sample_balanced_shots(pool, cfg.k,
                                              mix_seed(cfg.seed, fnv1a64(query.id)));
                break;
            case Retriever::bm25: {
                std::vector<std::string> ids;
                for (const auto& s : bm25_rank(retrieval_text(query), corpus, params, cfg.k)) {
                    ids.push_back(s.id);
                }
                shots = order_shots(std::move(ids));
                break;
            }
            case Retriever::topk:
                shots = order_shots(
                    topk_retrieve(backend.embed(retrieval_text(query)), embedded, cfg.k));
                break;
            case Retriever::votek:
                shots = fixed_shots;
                break;
        }
        ICLPrediction& pred = out[i];
        pred.pair_id = query.id;
        pred.prompt = build_prompt(shots, query, cfg.style, templates);
        pred.soft = icl_predict(backend.generate(pred.prompt, gen));
    });
    return out;
}

}  // namespace w2s
