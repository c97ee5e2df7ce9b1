#include "w2s/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "w2s/parallel.hpp"

namespace w2s {

int hard_vote(const std::vector<int>& labels) {
    if (labels.empty()) throw DataError("hard_vote: empty ballot");
    std::size_t ones = 0;
    for (int v : labels) {
        if (v != 0 && v != 1) throw DataError("hard_vote: label outside {0,1}");
        ones += static_cast<std::size_t>(v);
    }
    return 2 * ones > labels.size() ? 1 : 0;
}

std::pair<SoftLabel, int> soft_vote(const std::vector<SoftLabel>& dists) {
    if (dists.empty()) throw DataError("soft_vote: empty ballot");
    SoftLabel mean{0.0, 0.0};
    for (const auto& d : dists) {
        mean.p0 += d.p0;
        mean.p1 += d.p1;
    }
    mean.p0 /= static_cast<double>(dists.size());
    mean.p1 /= static_cast<double>(dists.size());
    return {mean, mean.hard()};
}

SoftLabel BaggingEnsemble::predict_soft(std::span<const double> x) const {
    if (members.empty()) throw DataError("empty ensemble");
    std::vector<SoftLabel> dists;
    dists.reserve(members.size());
    for (const auto& m : members) dists.push_back(m(x));
    if (voting == Voting::soft) return soft_vote(dists).first;
    // Hard voting still yields a distribution: the vote-share per class.
    std::vector<int> labels;
    labels.reserve(dists.size());
    for (const auto& d : dists) labels.push_back(d.hard());
    double share1 = 0.0;
    for (int v : labels) share1 += v;
    share1 /= static_cast<double>(labels.size());
    return {1.0 - share1, share1};
}

int BaggingEnsemble::predict(std::span<const double> x) const {
    if (voting == Voting::soft) return predict_soft(x).hard();
    std::vector<int> labels;
    labels.reserve(members.size());
    for (const auto& m : members) labels.push_back(m(x).hard());
    return hard_vote(labels);
}

BaggingEnsemble train_bagging(std::size_t num_rows, const std::vector<int>& labels,
                              const MemberFactory& factory, const BaggingConfig& config,
                              int parallelism) {
    if (config.num_models < 1) throw ConfigError("train_bagging: num_models must be >= 1");
    if (num_rows == 0) throw DataError("train_bagging: no rows");
    std::vector<std::size_t> all_rows(num_rows);
    for (std::size_t i = 0; i < num_rows; ++i) all_rows[i] = i;

    BaggingEnsemble ens;
    ens.voting = config.voting;
    ens.members.resize(static_cast<std::size_t>(config.num_models));
    ens.out_of_bag.resize(static_cast<std::size_t>(config.num_models));

    parallel_for(static_cast<std::size_t>(config.num_models), parallelism, [&](std::size_t i) {
        const std::uint64_t seed = config.base_seed + i;
        std::vector<std::size_t> rows;
        std::vector<std::size_t> oob;
        switch (config.sampler.kind) {
            case SamplerSpec::Kind::bootstrap: {
                auto bs = bootstrap_sample(all_rows, config.sampler.n, seed);
                rows = std::move(bs.in_bag);
                oob = std::move(bs.out_of_bag);
                break;
            }
            case SamplerSpec::Kind::random_subset: {
                auto ss = random_subset(all_rows, labels, config.sampler.n,
                                        config.sampler.class_balanced, seed);
                rows = std::move(ss.selected);
                break;
            }
            case SamplerSpec::Kind::none:
                rows = all_rows;
                break;
        }
        try {
            ens.members[i] = factory(rows, seed, static_cast<int>(i));
        } catch (const Error& e) {
            throw Error("member " + std::to_string(i) + ": " + e.what());
        }
        ens.out_of_bag[i] = std::move(oob);
    });
    return ens;
}

double AdaBoostModel::score(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& r : rounds) s += r.alpha * (r.h(x) == 1 ? 1.0 : -1.0);
    return s;
}

int AdaBoostModel::predict(std::span<const double> x) const {
    return score(x) > 0.0 ? 1 : 0;  // sign 0 falls through to label 0
}

AdaBoostModel train_adaboost(const FeatureView& features, const std::vector<int>& labels,
                             int rounds, const WeightedFactory& factory, std::uint64_t base_seed) {
    if (rounds < 1) throw ConfigError("train_adaboost: rounds must be >= 1");
    const std::size_t n = features.size();
    if (n == 0) throw DataError("train_adaboost: no rows");
    if (labels.size() != n) throw DataError("train_adaboost: label count mismatch");

    AdaBoostModel model;
    std::vector<double> w(n, 1.0);  // W_0(i) = 1, unnormalized
    model.weight_history.push_back(w);

    for (int t = 0; t < rounds; ++t) {
        HardClassifier h = factory(w, base_seed + static_cast<std::uint64_t>(t), t);

        // Error rate over normalized weights.
        std::vector<int> preds(n);
        double wsum = 0.0, werr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            preds[i] = h(features.row(i));
            wsum += w[i];
            if (preds[i] != labels[i]) werr += w[i];
        }
        double e = std::clamp(werr / wsum, kAdaBoostErrorEps, 1.0 - kAdaBoostErrorEps);
        const double alpha = 0.5 * std::log((1.0 - e) / e);
        const double z = 2.0 * std::sqrt(e * (1.0 - e));

        for (std::size_t i = 0; i < n; ++i) {
            const double y = labels[i] == 1 ? 1.0 : -1.0;
            const double hy = preds[i] == 1 ? 1.0 : -1.0;
            w[i] *= std::exp(-alpha * y * hy) / z;
        }
        model.weight_history.push_back(w);
        model.rounds.push_back(AdaBoostRound{std::move(h), alpha, e, z});
    }
    return model;
}

double GradBoostModel::score(std::span<const double> x) const {
    if (!initial) throw DataError("gradient boost model has no initial learner");
    double f = initial(x);
    for (const auto& h : rounds) f += shrinkage * h(x);
    return f;
}

GradBoostModel train_gradient_boost(const FeatureView& features, const std::vector<int>& labels,
                                    int rounds, double shrinkage, const RegressionFactory& factory,
                                    std::uint64_t base_seed) {
    if (rounds < 1) throw ConfigError("train_gradient_boost: rounds must be >= 1");
    if (shrinkage <= 0.0 || shrinkage > 1.0) {
        throw ConfigError("train_gradient_boost: shrinkage must be in (0, 1]");
    }
    const std::size_t n = features.size();
    if (n == 0) throw DataError("train_gradient_boost: no rows");
    if (labels.size() != n) throw DataError("train_gradient_boost: label count mismatch");

    GradBoostModel model;
    model.shrinkage = shrinkage;

    // F_1 = H_1, fit straight to y.
    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = static_cast<double>(labels[i]);
    model.initial = factory(targets, base_seed, 0);

    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = model.initial(features.row(i));

    for (int t = 1; t < rounds; ++t) {
        // Pseudo-residuals r = y - F under squared loss.
        for (std::size_t i = 0; i < n; ++i) {
            targets[i] = static_cast<double>(labels[i]) - f[i];
        }
        Regressor h = factory(targets, base_seed + static_cast<std::uint64_t>(t), t);
        for (std::size_t i = 0; i < n; ++i) f[i] += shrinkage * h(features.row(i));
        model.rounds.push_back(std::move(h));
    }
    return model;
}

}  // namespace w2s
