#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "w2s/ensemble.hpp"
#include "w2s/rng.hpp"

using namespace w2s;

namespace {

FeatureView index_view(std::size_t n) {
    // One feature: the row index. Stub learners key off it.
    FeatureView v;
    v.source = "idx";
    v.dim = 1;
    for (std::size_t i = 0; i < n; ++i) {
        v.ids.push_back("i" + std::to_string(i));
        v.data.push_back(static_cast<double>(i));
    }
    return v;
}

// Learner that predicts a fixed vector, indexed by the row feature.
HardClassifier fixed_predictor(std::vector<int> preds) {
    return [preds = std::move(preds)](std::span<const double> x) {
        return preds[static_cast<std::size_t>(x[0])];
    };
}

}  // namespace

TEST_CASE("hard_vote majority with ties to 0") {
    CHECK(hard_vote({1, 1, 0}) == 1);
    CHECK(hard_vote({0, 0, 1}) == 0);
    CHECK(hard_vote({1, 0}) == 0);   // exact tie
    CHECK(hard_vote({1}) == 1);
    CHECK_THROWS_AS(hard_vote({}), DataError);
    CHECK_THROWS_AS(hard_vote({2}), DataError);
}

TEST_CASE("soft_vote is the arithmetic mean with argmax tie to 0") {
    auto [mean, label] = soft_vote({SoftLabel{0.4, 0.6}, SoftLabel{0.8, 0.2}});
    CHECK(mean.p0 == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(mean.p1 == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(label == 0);

    auto [tied, tied_label] = soft_vote({SoftLabel{0.5, 0.5}});
    CHECK(tied_label == 0);
    CHECK(tied.p0 == doctest::Approx(0.5));

    CHECK_THROWS_AS(soft_vote({}), DataError);

    // brute-force mean on random inputs
    Rng rng(60);
    for (int t = 0; t < 100; ++t) {
        std::vector<SoftLabel> dists;
        double s0 = 0.0, s1 = 0.0;
        int k = 1 + static_cast<int>(rng.below(9));
        for (int i = 0; i < k; ++i) {
            double p = rng.unit();
            dists.push_back(SoftLabel{1.0 - p, p});
            s0 += 1.0 - p;
            s1 += p;
        }
        auto [m, l] = soft_vote(dists);
        CHECK(m.p0 == doctest::Approx(s0 / k).epsilon(1e-12));
        CHECK(m.p1 == doctest::Approx(s1 / k).epsilon(1e-12));
        CHECK(l == (m.p1 > m.p0 ? 1 : 0));
    }
}

TEST_CASE("degenerate soft voting equals hard voting on all 5-voter patterns") {
    for (int mask = 0; mask < 32; ++mask) {
        std::vector<int> labels;
        std::vector<SoftLabel> dists;
        for (int i = 0; i < 5; ++i) {
            int bit = (mask >> i) & 1;
            labels.push_back(bit);
            dists.push_back(soft_from_hard(bit));
        }
        CHECK(soft_vote(dists).second == hard_vote(labels));
    }
}

TEST_CASE("bootstrap_sample draws n with the complement out of bag") {
    std::vector<int> ids(50);
    std::iota(ids.begin(), ids.end(), 0);
    auto res = bootstrap_sample(ids, 50, 7);
    CHECK(res.in_bag.size() == 50);

    std::set<int> drawn(res.in_bag.begin(), res.in_bag.end());
    for (int id : res.out_of_bag) CHECK(drawn.count(id) == 0);
    CHECK(drawn.size() + res.out_of_bag.size() == 50);

    // out-of-bag preserves input order
    for (std::size_t i = 1; i < res.out_of_bag.size(); ++i) {
        CHECK(res.out_of_bag[i - 1] < res.out_of_bag[i]);
    }

    auto again = bootstrap_sample(ids, 50, 7);
    CHECK(again.in_bag == res.in_bag);
    CHECK(bootstrap_sample(ids, 50, 8).in_bag != res.in_bag);

    CHECK_THROWS_AS(bootstrap_sample(std::vector<int>{}, 5, 1), DataError);
    CHECK_THROWS_AS(bootstrap_sample(ids, 0, 1), ConfigError);
}

TEST_CASE("bootstrap distinct fraction is near 1 - 1/e") {
    std::vector<int> ids(1000);
    std::iota(ids.begin(), ids.end(), 0);
    double total = 0.0;
    for (int s = 0; s < 50; ++s) {
        auto res = bootstrap_sample(ids, 1000, 9000 + s);
        std::set<int> distinct(res.in_bag.begin(), res.in_bag.end());
        total += static_cast<double>(distinct.size()) / 1000.0;
    }
    double mean = total / 50.0;
    CHECK(mean > 0.61);
    CHECK(mean < 0.66);
}

TEST_CASE("random_subset honors size, balance, and errors") {
    std::vector<int> ids(20);
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(i % 2);

    auto res = random_subset(ids, labels, 8, false, 3);
    CHECK(res.selected.size() == 8);
    std::set<int> sel(res.selected.begin(), res.selected.end());
    CHECK(sel.size() == 8);
    CHECK(res.rest.size() == 12);
    for (int id : res.rest) CHECK(sel.count(id) == 0);

    auto bal = random_subset(ids, labels, 8, true, 3);
    int ones = 0;
    for (int id : bal.selected) ones += labels[static_cast<std::size_t>(id)];
    CHECK(ones == 4);

    CHECK_THROWS_AS(random_subset(ids, labels, 7, true, 1), ConfigError);   // odd balanced
    CHECK_THROWS_AS(random_subset(ids, labels, 21, false, 1), ConfigError); // n > population
    std::vector<int> skew(20, 1);
    CHECK_THROWS_AS(random_subset(ids, skew, 8, true, 1), ConfigError);     // class 0 empty
    CHECK(random_subset(ids, labels, 8, false, 3).selected == res.selected);
}

TEST_CASE("train_bagging assembles members by index, parallel-safe") {
    std::vector<int> labels(10, 0);
    std::vector<std::uint64_t> seen_seeds(4, 0);
    MemberFactory factory = [&](const std::vector<std::size_t>& rows, std::uint64_t seed,
                                int index) -> SoftClassifier {
        seen_seeds[static_cast<std::size_t>(index)] = seed;
        double p1 = static_cast<double>(index) / 10.0;
        (void)rows;
        return [p1](std::span<const double>) { return SoftLabel{1.0 - p1, p1}; };
    };
    BaggingConfig cfg;
    cfg.num_models = 4;
    cfg.base_seed = 100;
    cfg.sampler.kind = SamplerSpec::Kind::bootstrap;
    cfg.sampler.n = 10;

    auto serial = train_bagging(10, labels, factory, cfg, 1);
    for (int i = 0; i < 4; ++i) CHECK(seen_seeds[static_cast<std::size_t>(i)] == 100 + i);

    auto parallel = train_bagging(10, labels, factory, cfg, 4);
    std::vector<double> x = {0.0};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(serial.members[i](x).p1 == parallel.members[i](x).p1);
    }
    CHECK(serial.out_of_bag.size() == 4);
}

TEST_CASE("bagging hard voting reports the vote share") {
    BaggingEnsemble ens;
    ens.voting = Voting::hard;
    ens.members.push_back([](std::span<const double>) { return SoftLabel{0.1, 0.9}; });
    ens.members.push_back([](std::span<const double>) { return SoftLabel{0.2, 0.8}; });
    ens.members.push_back([](std::span<const double>) { return SoftLabel{0.9, 0.1}; });
    std::vector<double> x = {0.0};
    SoftLabel share = ens.predict_soft(x);
    CHECK(share.p1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(ens.predict(x) == 1);

    BaggingEnsemble tie;
    tie.voting = Voting::hard;
    tie.members.push_back([](std::span<const double>) { return SoftLabel{0.0, 1.0}; });
    tie.members.push_back([](std::span<const double>) { return SoftLabel{1.0, 0.0}; });
    CHECK(tie.predict(x) == 0);
}

TEST_CASE("adaboost hand oracle: one round on the 4-sample fixture") {
    // y = [1,1,0,0]; the stub errs only on sample 3 (predicts 1, truth 0).
    // Normalized weights are 1/4 each, so e = 0.25, alpha = ln(3)/2,
    // Z = 2 sqrt(3/16) = sqrt(3)/2. Updated unnormalized weights:
    // correct -> exp(-alpha)/Z = 2/3, wrong -> exp(alpha)/Z = 2.
    auto view = index_view(4);
    std::vector<int> y = {1, 1, 0, 0};
    WeightedFactory factory = [](const std::vector<double>&, std::uint64_t, int) {
        return fixed_predictor({1, 1, 0, 1});
    };
    AdaBoostModel model = train_adaboost(view, y, 1, factory, 0);

    REQUIRE(model.rounds.size() == 1);
    const double alpha = 0.5 * std::log(3.0);
    CHECK(model.rounds[0].error == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(model.rounds[0].alpha == doctest::Approx(alpha).epsilon(1e-12));
    CHECK(model.rounds[0].z == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));

    REQUIRE(model.weight_history.size() == 2);
    CHECK(model.weight_history[0] == std::vector<double>{1.0, 1.0, 1.0, 1.0});
    const auto& w1 = model.weight_history[1];
    CHECK(w1[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(w1[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(w1[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(w1[3] == doctest::Approx(2.0).epsilon(1e-12));

    // the normalizer preserves total mass
    double sum1 = w1[0] + w1[1] + w1[2] + w1[3];
    CHECK(sum1 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("adaboost e = 0.5 gives alpha 0 and unchanged weights") {
    auto view = index_view(4);
    std::vector<int> y = {1, 1, 0, 0};
    WeightedFactory factory = [](const std::vector<double>&, std::uint64_t, int) {
        return fixed_predictor({1, 0, 0, 1});  // errs on exactly half the mass
    };
    AdaBoostModel model = train_adaboost(view, y, 1, factory, 0);
    CHECK(model.rounds[0].alpha == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(model.rounds[0].z == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) {
        CHECK(model.weight_history[1][static_cast<std::size_t>(i)] ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("adaboost weight mass is invariant across random fixtures") {
    Rng rng(21);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 20;
        auto view = index_view(n);
        std::vector<int> y;
        for (std::size_t i = 0; i < n; ++i) y.push_back(static_cast<int>(rng.below(2)));
        WeightedFactory factory = [&](const std::vector<double>&, std::uint64_t seed, int round) {
            Rng member(mix_seed(seed, static_cast<std::uint64_t>(round)));
            std::vector<int> preds;
            for (std::size_t i = 0; i < n; ++i) preds.push_back(static_cast<int>(member.below(2)));
            return fixed_predictor(preds);
        };
        AdaBoostModel model = train_adaboost(view, y, 3, factory, 500 + t);
        REQUIRE(model.weight_history.size() == 4);
        for (std::size_t r = 1; r < model.weight_history.size(); ++r) {
            double prev = std::accumulate(model.weight_history[r - 1].begin(),
                                          model.weight_history[r - 1].end(), 0.0);
            double cur = std::accumulate(model.weight_history[r].begin(),
                                         model.weight_history[r].end(), 0.0);
            CHECK(cur == doctest::Approx(prev).epsilon(1e-9));
        }
    }
}

TEST_CASE("adaboost predict is the alpha-weighted sign with ties to 0") {
    auto view = index_view(2);
    // Two rounds with equal alpha and opposite predictions cancel: score 0.
    AdaBoostModel model;
    model.rounds.push_back(AdaBoostRound{fixed_predictor({1, 1}), 0.7, 0.25, 1.0});
    model.rounds.push_back(AdaBoostRound{fixed_predictor({0, 1}), 0.7, 0.25, 1.0});
    std::vector<double> x0 = {0.0}, x1 = {1.0};
    CHECK(model.score(x0) == doctest::Approx(0.0));
    CHECK(model.predict(x0) == 0);  // tie rule
    CHECK(model.score(x1) == doctest::Approx(1.4));
    CHECK(model.predict(x1) == 1);
}

TEST_CASE("gradient boost with T = 1 is exactly the initial fit") {
    auto view = index_view(8);
    std::vector<int> y = {0, 1, 0, 1, 1, 0, 1, 0};
    RegressionFactory factory = [&](const std::vector<double>& targets, std::uint64_t,
                                    int) -> Regressor {
        LinearProbe m = fit_ridge(view, targets);
        return [m](std::span<const double> x) { return linear_value(m, x); };
    };
    GradBoostModel model = train_gradient_boost(view, y, 1, 0.1, factory, 0);
    CHECK(model.rounds.empty());
    for (std::size_t i = 0; i < view.size(); ++i) {
        CHECK(model.score(view.row(i)) == doctest::Approx(model.initial(view.row(i))));
    }
}

TEST_CASE("gradient boost fits residuals and classifies at one half") {
    // 2D exact-linear target: shrinkage 1 with an exact regressor converges
    // after the first correction round.
    FeatureView v;
    v.source = "g";
    v.dim = 2;
    Rng rng(91);
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
        double a = rng.normal(), b = rng.normal();
        v.ids.push_back("g" + std::to_string(i));
        v.data.push_back(a);
        v.data.push_back(b);
        y.push_back(a + b > 0 ? 1 : 0);
    }
    RegressionFactory factory = [&](const std::vector<double>& targets, std::uint64_t,
                                    int) -> Regressor {
        LinearProbe m = fit_ridge(v, targets);
        return [m](std::span<const double> x) { return linear_value(m, x); };
    };
    GradBoostModel model = train_gradient_boost(v, y, 4, 0.5, factory, 0);
    CHECK(model.rounds.size() == 3);
    CHECK(model.shrinkage == doctest::Approx(0.5));

    // training MSE non-increasing as rounds accumulate
    auto mse_at = [&](std::size_t upto) {
        double total = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            double f = model.initial(v.row(i));
            for (std::size_t r = 0; r < upto; ++r) f += model.shrinkage * model.rounds[r](v.row(i));
            double err = f - y[i];
            total += err * err;
        }
        return total / static_cast<double>(v.size());
    };
    double prev = mse_at(0);
    for (std::size_t r = 1; r <= model.rounds.size(); ++r) {
        double cur = mse_at(r);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }

    // prediction thresholds F at one half
    int agree = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        int pred = model.predict(v.row(i));
        CHECK(pred == (model.score(v.row(i)) >= 0.5 ? 1 : 0));
        agree += pred == y[i];
    }
    CHECK(agree >= 27);  // exact-linear data, near-perfect fit
}
