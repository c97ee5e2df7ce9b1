#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "w2s/common.hpp"

namespace w2s {

/// Probability pair over {incorrect, correct}; the universal weak-label
/// currency. Ties resolve to 0, the one global tie rule.
struct SoftLabel {
    double p0 = 0.5;
    double p1 = 0.5;
    int hard() const { return p1 > p0 ? 1 : 0; }
};

inline SoftLabel soft_from_hard(int label) {
    return label == 1 ? SoftLabel{0.0, 1.0} : SoftLabel{1.0, 0.0};
}

/// Matrix of per-example feature vectors, row-aligned with ids.
struct FeatureView {
    std::string source;            // e.g. "layer:17", "synthetic"
    std::vector<std::string> ids;  // unique, one per row
    std::size_t dim = 0;
    std::vector<double> data;      // row-major, ids.size() * dim

    std::size_t size() const { return ids.size(); }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }

    /// Checks the structural invariants: shape, unique ids, finite entries.
    void validate() const;
};

using SoftLabelMap = std::unordered_map<std::string, SoftLabel>;

struct ProbeConfig {
    int epochs = 2;            // student default
    int batch_size = 32;
    double learning_rate = 0.1;
    bool early_stop = false;
    int patience = 1;          // evaluations without improvement before stopping
    std::uint64_t seed = 0;
};

/// Logistic model: p1 = sigmoid(w . x + b).
struct LinearProbe {
    std::vector<double> weights;
    double bias = 0.0;
};

/// Mean cross-entropy of the probe against soft targets, optionally
/// weighted per sample. Targets are row-aligned with the view.
double probe_loss(const LinearProbe& probe, const FeatureView& features,
                  const std::vector<SoftLabel>& targets,
                  const std::vector<double>& sample_weights = {});

/// Analytic gradient of probe_loss; returns (d/dw, d/db).
std::pair<std::vector<double>, double> probe_gradient(const LinearProbe& probe,
                                                      const FeatureView& features,
                                                      const std::vector<SoftLabel>& targets,
                                                      const std::vector<double>& sample_weights = {});

/// Train by mini-batch gradient descent on cross-entropy against the full
/// soft target distribution. With early_stop and a validation set the
/// returned parameters are the ones with the best validation agreement
/// against the (weak) validation labels.
LinearProbe train_probe(const FeatureView& features, const SoftLabelMap& targets,
                        const ProbeConfig& config,
                        const FeatureView* valid_features = nullptr,
                        const SoftLabelMap* valid_targets = nullptr,
                        const std::vector<double>& sample_weights = {});

std::vector<SoftLabel> predict_probe(const LinearProbe& probe, const FeatureView& features);
SoftLabel predict_probe_row(const LinearProbe& probe, std::span<const double> x);

/// Restrict the view to ceil(proportion * d) dimensions drawn uniformly
/// without replacement. Kept dimensions stay in ascending original order and
/// the source tag records the chosen indices.
FeatureView select_feature_dims(const FeatureView& view, double proportion, std::uint64_t seed);

/// FeatureView file: JSONL of {id, vector}. Source tag comes from the
/// filename stem unless overridden.
FeatureView load_feature_view(const std::filesystem::path& path, const std::string& source = "");
void write_feature_view(const std::filesystem::path& path, const FeatureView& view);

void save_probe(const std::filesystem::path& path, const LinearProbe& probe,
                const std::string& source, std::uint64_t seed);
LinearProbe load_probe(const std::filesystem::path& path);

/// Closed-form least-squares fit of real targets (ridge-regularized normal
/// equations, Gaussian elimination). Reuses LinearProbe storage; read the
/// result with linear_value, not predict_probe.
LinearProbe fit_ridge(const FeatureView& features, const std::vector<double>& targets,
                      double lambda = 1e-6);
double linear_value(const LinearProbe& model, std::span<const double> x);

}  // namespace w2s
