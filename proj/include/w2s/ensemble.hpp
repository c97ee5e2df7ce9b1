#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "w2s/learners.hpp"
#include "w2s/rng.hpp"

namespace w2s {

enum class Voting { hard, soft };

/// Majority label; exact ties resolve to 0.
int hard_vote(const std::vector<int>& labels);

/// Arithmetic mean per class plus its argmax (tie -> 0).
std::pair<SoftLabel, int> soft_vote(const std::vector<SoftLabel>& dists);

template <typename T>
struct BootstrapResult {
    std::vector<T> in_bag;       // n draws with replacement, draw order
    std::vector<T> out_of_bag;   // never-drawn ids, input order
};

/// n draws with replacement; the never-drawn remainder forms the
/// out-of-bag validation set.
template <typename T>
BootstrapResult<T> bootstrap_sample(const std::vector<T>& ids, std::size_t n, std::uint64_t seed) {
    if (ids.empty()) throw DataError("bootstrap_sample: empty id list");
    if (n == 0) throw ConfigError("bootstrap_sample: n must be >= 1");
    Rng rng(seed);
    BootstrapResult<T> out;
    out.in_bag.reserve(n);
    std::vector<char> drawn(ids.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = static_cast<std::size_t>(rng.below(ids.size()));
        out.in_bag.push_back(ids[j]);
        drawn[j] = 1;
    }
    for (std::size_t j = 0; j < ids.size(); ++j) {
        if (!drawn[j]) out.out_of_bag.push_back(ids[j]);
    }
    return out;
}

template <typename T>
struct SubsetResult {
    std::vector<T> selected;  // draw order
    std::vector<T> rest;      // input order
};

/// Seeded uniform sample without replacement. With class_balanced set the
/// selection holds exactly n/2 ids per class.
template <typename T>
SubsetResult<T> random_subset(const std::vector<T>& ids, const std::vector<int>& labels,
                              std::size_t n, bool class_balanced, std::uint64_t seed) {
    if (ids.size() != labels.size())
        throw DataError("random_subset: ids and labels differ in length");
    if (n > ids.size()) throw ConfigError("random_subset: n exceeds population");
    Rng rng(seed);
    std::vector<char> picked(ids.size(), 0);
    SubsetResult<T> out;
    out.selected.reserve(n);
    if (class_balanced) {
        if (n % 2 != 0) throw ConfigError("random_subset: balanced n must be even");
        for (int cls : {0, 1}) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < ids.size(); ++i)
                if (labels[i] == cls) members.push_back(i);
            if (members.size() < n / 2)
                throw ConfigError("random_subset: class " + std::to_string(cls) + " has " +
                                  std::to_string(members.size()) + " members, need " +
                                  std::to_string(n / 2));
            for (std::size_t idx : rng.sample_indices(members.size(), n / 2)) {
                picked[members[idx]] = 1;
                out.selected.push_back(ids[members[idx]]);
            }
        }
    } else {
        for (std::size_t idx : rng.sample_indices(ids.size(), n)) {
            picked[idx] = 1;
            out.selected.push_back(ids[idx]);
        }
    }
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (!picked[i]) out.rest.push_back(ids[i]);
    return out;
}

struct SamplerSpec {
    enum class Kind { bootstrap, random_subset, none } kind = Kind::bootstrap;
    std::size_t n = 0;
    bool class_balanced = false;
};

struct BaggingConfig {
    SamplerSpec sampler;
    int num_models = 1;
    Voting voting = Voting::soft;
    std::uint64_t base_seed = 0;
};

/// Member classifier over a feature row.
using SoftClassifier = std::function<SoftLabel(std::span<const double>)>;

/// Trains one member from the sampled row indices. Member seeds are
/// base_seed + index so an ensemble can grow without reshuffling.
using MemberFactory =
    std::function<SoftClassifier(const std::vector<std::size_t>& rows, std::uint64_t seed, int index)>;

struct BaggingEnsemble {
    std::vector<SoftClassifier> members;
    std::vector<std::vector<std::size_t>> out_of_bag;  // row indices, empty unless bootstrap
    Voting voting = Voting::soft;

    SoftLabel predict_soft(std::span<const double> x) const;
    int predict(std::span<const double> x) const;
};

/// Member i trains on the sampler output with seed base_seed + i. Members may
/// train in parallel; assembly is by member index so the result is
/// independent of scheduling.
BaggingEnsemble train_bagging(std::size_t num_rows, const std::vector<int>& labels,
                              const MemberFactory& factory, const BaggingConfig& config,
                              int parallelism = 1);

/// Hard classifier over a feature row, output in {0, 1}.
using HardClassifier = std::function<int(std::span<const double>)>;

/// Trains a weight-aware learner; weights are row-aligned and unnormalized.
using WeightedFactory =
    std::function<HardClassifier(const std::vector<double>& weights, std::uint64_t seed, int round)>;

struct AdaBoostRound {
    HardClassifier h;
    double alpha = 0.0;
    double error = 0.0;  // weighted error, clamped into [eps, 1-eps]
    double z = 0.0;      // 2 sqrt(e (1-e))
};

struct AdaBoostModel {
    std::vector<AdaBoostRound> rounds;
    std::vector<std::vector<double>> weight_history;  // W_0, W_1, ..., W_T

    double score(std::span<const double> x) const;  // sum_t alpha_t h_t(x), h in {-1,+1}
    int predict(std::span<const double> x) const;   // sign, 0 -> label 0
};

inline constexpr double kAdaBoostErrorEps = 1e-6;

/// Sample-reweighting boosting. Labels are {0,1} at the boundary and
/// {-1,+1} inside the weight update. Weights start at 1 (unnormalized);
/// the error rate uses normalized weights.
AdaBoostModel train_adaboost(const FeatureView& features, const std::vector<int>& labels,
                             int rounds, const WeightedFactory& factory,
                             std::uint64_t base_seed = 0);

using Regressor = std::function<double(std::span<const double>)>;

/// Fits real-valued targets by least squares.
using RegressionFactory =
    std::function<Regressor(const std::vector<double>& targets, std::uint64_t seed, int round)>;

struct GradBoostModel {
    Regressor initial;               // F_1, fit directly to y
    std::vector<Regressor> rounds;   // H_2 .. H_T, each scaled by shrinkage
    double shrinkage = 0.1;

    double score(std::span<const double> x) const;  // F(x)
    int predict(std::span<const double> x) const { return score(x) >= 0.5 ? 1 : 0; }
};

/// Residual-fitting boosting: each H_t fits r_i = y_i - F_{t-1}(x_i) and
/// F_t = F_{t-1} + v H_t.
GradBoostModel train_gradient_boost(const FeatureView& features, const std::vector<int>& labels,
                                    int rounds, double shrinkage, const RegressionFactory& factory,
                                    std::uint64_t base_seed = 0);

}  // namespace w2s
