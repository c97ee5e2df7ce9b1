#include "w2s/learners.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "w2s/jsonl.hpp"
#include "w2s/rng.hpp"

namespace w2s {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kLogEps = 1e-12;

std::vector<SoftLabel> align_targets(const FeatureView& features, const SoftLabelMap& targets) {
    std::vector<SoftLabel> out;
    out.reserve(features.size());
    for (const auto& id : features.ids) {
        auto it = targets.find(id);
        if (it == targets.end()) throw DataError("no target for id \"" + id + "\"");
        out.push_back(it->second);
    }
    return out;
}

// Loss and gradient over a set of rows in one pass. Weights act as relative
// sample weights, normalized over the chosen rows.
struct BatchStats {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

BatchStats batch_loss_grad(const LinearProbe& probe, const FeatureView& features,
                           const std::vector<SoftLabel>& targets,
                           const std::vector<double>& sample_weights,
                           const std::vector<std::size_t>& rows) {
    BatchStats st;
    st.grad_w.assign(features.dim, 0.0);
    double total_weight = 0.0;
    for (std::size_t i : rows) {
        const double w = sample_weights.empty() ? 1.0 : sample_weights[i];
        total_weight += w;
        auto x = features.row(i);
        double z = probe.bias;
        for (std::size_t d = 0; d < features.dim; ++d) z += probe.weights[d] * x[d];
        const double s = sigmoid(z);
        const double sc = std::clamp(s, kLogEps, 1.0 - kLogEps);
        const SoftLabel& t = targets[i];
        st.loss += w * -(t.p1 * std::log(sc) + t.p0 * std::log(1.0 - sc));
        const double dz = w * (s - t.p1);
        for (std::size_t d = 0; d < features.dim; ++d) st.grad_w[d] += dz * x[d];
        st.grad_b += dz;
    }
    if (total_weight > 0.0) {
        st.loss /= total_weight;
        for (auto& g : st.grad_w) g /= total_weight;
        st.grad_b /= total_weight;
    }
    return st;
}

double agreement(const LinearProbe& probe, const FeatureView& features,
                 const std::vector<SoftLabel>& targets) {
    if (features.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (predict_probe_row(probe, features.row(i)).hard() == targets[i].hard()) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(features.size());
}

}  // namespace

void FeatureView::validate() const {
    if (dim == 0) throw DataError("feature view \"" + source + "\": zero dimension");
    if (data.size() != ids.size() * dim) {
        throw DataError("feature view \"" + source + "\": shape mismatch");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) {
            throw DataError("feature view \"" + source + "\": duplicate id \"" + id + "\"");
        }
    }
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw DataError("feature view \"" + source + "\": non-finite entry");
        }
    }
}

double probe_loss(const LinearProbe& probe, const FeatureView& features,
                  const std::vector<SoftLabel>& targets,
                  const std::vector<double>& sample_weights) {
    if (probe.weights.size() != features.dim) throw DataError("probe/feature dimension mismatch");
    if (targets.size() != features.size()) throw DataError("target count mismatch");
    std::vector<std::size_t> rows(features.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return batch_loss_grad(probe, features, targets, sample_weights, rows).loss;
}

std::pair<std::vector<double>, double> probe_gradient(const LinearProbe& probe,
                                                      const FeatureView& features,
                                                      const std::vector<SoftLabel>& targets,
                                                      const std::vector<double>& sample_weights) {
    if (probe.weights.size() != features.dim) throw DataError("probe/feature dimension mismatch");
    if (targets.size() != features.size()) throw DataError("target count mismatch");
    std::vector<std::size_t> rows(features.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    auto st = batch_loss_grad(probe, features, targets, sample_weights, rows);
    return {std::move(st.grad_w), st.grad_b};
}

LinearProbe train_probe(const FeatureView& features, const SoftLabelMap& targets,
                        const ProbeConfig& config, const FeatureView* valid_features,
                        const SoftLabelMap* valid_targets,
                        const std::vector<double>& sample_weights) {
    features.validate();
    if (features.size() == 0) throw DataError("cannot train on an empty feature view");
    if (config.epochs < 1 || config.batch_size < 1 || config.learning_rate <= 0.0) {
        throw ConfigError("probe config: epochs >= 1, batch_size >= 1, learning_rate > 0");
    }
    if (!sample_weights.empty() && sample_weights.size() != features.size()) {
        throw DataError("sample weight count mismatch");
    }
    auto aligned = align_targets(features, targets);

    LinearProbe probe;
    probe.weights.assign(features.dim, 0.0);

    const bool track_valid = config.early_stop && valid_features && valid_targets;
    std::vector<SoftLabel> valid_aligned;
    if (track_valid) {
        if (valid_features->dim != features.dim) {
            throw DataError("validation feature dimension mismatch");
        }
        valid_aligned = align_targets(*valid_features, *valid_targets);
    }
    LinearProbe best = probe;
    double best_agreement = -1.0;
    int stale = 0;

    Rng rng(mix_seed(config.seed, fnv1a64("train_probe")));
    std::vector<std::size_t> order(features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        const std::size_t bs = static_cast<std::size_t>(config.batch_size);
        for (std::size_t start = 0; start < order.size(); start += bs) {
            std::vector<std::size_t> batch(
                order.begin() + static_cast<std::ptrdiff_t>(start),
                order.begin() + static_cast<std::ptrdiff_t>(std::min(start + bs, order.size())));
            auto st = batch_loss_grad(probe, features, aligned, sample_weights, batch);
            if (!std::isfinite(st.loss)) {
                throw DataError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                                ", batch " + std::to_string(start / bs + 1));
            }
            for (std::size_t d = 0; d < features.dim; ++d) {
                probe.weights[d] -= config.learning_rate * st.grad_w[d];
            }
            probe.bias -= config.learning_rate * st.grad_b;
        }
        if (track_valid) {
            double a = agreement(probe, *valid_features, valid_aligned);
            if (a > best_agreement) {
                best_agreement = a;
                best = probe;
                stale = 0;
            } else if (++stale >= config.patience) {
                return best;
            }
        }
    }
    return track_valid ? best : probe;
}

SoftLabel predict_probe_row(const LinearProbe& probe, std::span<const double> x) {
    if (probe.weights.size() != x.size()) throw DataError("probe/feature dimension mismatch");
    double z = probe.bias;
    for (std::size_t d = 0; d < x.size(); ++d) z += probe.weights[d] * x[d];
    const double p1 = sigmoid(z);
    return {1.0 - p1, p1};
}

std::vector<SoftLabel> predict_probe(const LinearProbe& probe, const FeatureView& features) {
    if (probe.weights.size() != features.dim) throw DataError("probe/feature dimension mismatch");
    std::vector<SoftLabel> out;
    out.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        out.push_back(predict_probe_row(probe, features.row(i)));
    }
    return out;
}

FeatureView select_feature_dims(const FeatureView& view, double proportion, std::uint64_t seed) {
    if (proportion <= 0.0 || proportion > 1.0) {
        throw ConfigError("feature proportion must be in (0, 1]");
    }
    const std::size_t keep =
        static_cast<std::size_t>(std::ceil(proportion * static_cast<double>(view.dim)));
    Rng rng(mix_seed(seed, fnv1a64("select_feature_dims")));
    auto picked = rng.sample_indices(view.dim, keep);
    std::sort(picked.begin(), picked.end());

    FeatureView out;
    std::string tag = view.source + "|dims:";
    for (std::size_t i = 0; i < picked.size(); ++i) {
        if (i) tag += ',';
        tag += std::to_string(picked[i]);
    }
    out.source = tag;
    out.ids = view.ids;
    out.dim = keep;
    out.data.reserve(view.size() * keep);
    for (std::size_t r = 0; r < view.size(); ++r) {
        auto x = view.row(r);
        for (std::size_t d : picked) out.data.push_back(x[d]);
    }
    return out;
}

FeatureView load_feature_view(const std::filesystem::path& path, const std::string& source) {
    auto rows = read_jsonl(path);
    FeatureView view;
    view.source = source.empty() ? path.stem().string() : source;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = path.string() + ":" + std::to_string(i + 1);
        if (!row.contains("id") || !row["id"].is_string()) {
            throw DataError(where + ": missing string \"id\"");
        }
        if (!row.contains("vector") || !row["vector"].is_array() || row["vector"].empty()) {
            throw DataError(where + ": missing nonempty array \"vector\"");
        }
        if (view.dim == 0) {
            view.dim = row["vector"].size();
        } else if (row["vector"].size() != view.dim) {
            throw DataError(where + ": vector dimension differs from first row");
        }
        view.ids.push_back(row["id"].get<std::string>());
        for (const auto& v : row["vector"]) {
            if (!v.is_number()) throw DataError(where + ": non-numeric vector entry");
            view.data.push_back(v.get<double>());
        }
    }
    view.validate();
    return view;
}

void write_feature_view(const std::filesystem::path& path, const FeatureView& view) {
    std::vector<Json> rows;
    rows.reserve(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
        Json row;
        row["id"] = view.ids[i];
        auto x = view.row(i);
        row["vector"] = std::vector<double>(x.begin(), x.end());
        rows.push_back(std::move(row));
    }
    write_jsonl(path, rows);
}

void save_probe(const std::filesystem::path& path, const LinearProbe& probe,
                const std::string& source, std::uint64_t seed) {
    Json obj;
    obj["source"] = source;
    obj["seed"] = seed;
    obj["dim"] = probe.weights.size();
    obj["weights"] = probe.weights;
    obj["bias"] = probe.bias;
    write_text_file(path, obj.dump(2) + "\n");
}

LinearProbe fit_ridge(const FeatureView& features, const std::vector<double>& targets,
                      double lambda) {
    if (targets.size() != features.size()) throw DataError("fit_ridge: target count mismatch");
    if (features.size() == 0) throw DataError("fit_ridge: no rows");
    if (lambda < 0.0) throw ConfigError("fit_ridge: lambda must be >= 0");
    const std::size_t d = features.dim + 1;  // bias via augmented constant column

    // Normal equations A = X'X + lambda I, rhs = X'y.
    std::vector<double> a(d * d, 0.0);
    std::vector<double> rhs(d, 0.0);
    for (std::size_t r = 0; r < features.size(); ++r) {
        auto x = features.row(r);
        auto at = [&](std::size_t i) { return i < features.dim ? x[i] : 1.0; };
        for (std::size_t i = 0; i < d; ++i) {
            rhs[i] += at(i) * targets[r];
            for (std::size_t j = i; j < d; ++j) a[i * d + j] += at(i) * at(j);
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        a[i * d + i] += lambda;
        for (std::size_t j = 0; j < i; ++j) a[i * d + j] = a[j * d + i];
    }

    // Gaussian elimination with partial pivoting.
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::abs(a[r * d + col]) > std::abs(a[pivot * d + col])) pivot = r;
        }
        if (std::abs(a[pivot * d + col]) < 1e-12) {
            throw DataError("fit_ridge: singular system, raise lambda");
        }
        if (pivot != col) {
            for (std::size_t j = 0; j < d; ++j) std::swap(a[pivot * d + j], a[col * d + j]);
            std::swap(rhs[pivot], rhs[col]);
        }
        for (std::size_t r = col + 1; r < d; ++r) {
            const double f = a[r * d + col] / a[col * d + col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < d; ++j) a[r * d + j] -= f * a[col * d + j];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> sol(d, 0.0);
    for (std::size_t i = d; i-- > 0;) {
        double v = rhs[i];
        for (std::size_t j = i + 1; j < d; ++j) v -= a[i * d + j] * sol[j];
        sol[i] = v / a[i * d + i];
    }

    LinearProbe model;
    model.weights.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(features.dim));
    model.bias = sol[features.dim];
    return model;
}

double linear_value(const LinearProbe& model, std::span<const double> x) {
    if (model.weights.size() != x.size()) throw DataError("linear model dimension mismatch");
    double v = model.bias;
    for (std::size_t i = 0; i < x.size(); ++i) v += model.weights[i] * x[i];
    return v;
}

LinearProbe load_probe(const std::filesystem::path& path) {
    Json obj = Json::parse(read_text_file(path), nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("weights") ||
        !obj.contains("bias")) {
        throw DataError("malformed probe file: " + path.string());
    }
    LinearProbe probe;
    probe.weights = obj["weights"].get<std::vector<double>>();
    probe.bias = obj["bias"].get<double>();
    return probe;
}

}  // namespace w2s
