#include "w2s/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>
#include <unordered_map>

#include "w2s/backends.hpp"
#include "w2s/dataset.hpp"
#include "w2s/ensemble.hpp"
#include "w2s/evalreport.hpp"
#include "w2s/icl.hpp"
#include "w2s/jsonl.hpp"
#include "w2s/learners.hpp"
#include "w2s/oversight.hpp"
#include "w2s/parallel.hpp"
#include "w2s/rng.hpp"
#include "w2s/templates.hpp"

namespace w2s {

namespace fs = std::filesystem;

std::string file_digest(const fs::path& path) { return sha256_hex(read_text_file(path)); }

void write_manifest(const fs::path& out_dir, const std::string& command, const Config& cfg,
                    const std::map<std::string, std::string>& inputs,
                    const std::map<std::string, std::string>& outputs) {
    Json m;
    m["command"] = command;
    m["seed"] = cfg.get_u64("seed", 0);
    m["config_fingerprint"] = cfg.fingerprint();
    Json resolved;
    for (const auto& [k, v] : cfg.entries()) resolved[k] = v;
    m["config"] = std::move(resolved);
    Json in;
    for (const auto& [k, v] : inputs) in[k] = v;
    m["inputs"] = std::move(in);
    Json out;
    for (const auto& [k, v] : outputs) out[k] = v;
    m["outputs"] = std::move(out);
    write_text_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

namespace {

fs::path require_out_dir(const Config& cfg) {
    std::string out = cfg.require_string("out");
    fs::create_directories(out);
    return out;
}

std::uint64_t require_seed(const Config& cfg) {
    if (!cfg.has("seed")) throw ConfigError("missing required config key: seed");
    return cfg.get_u64("seed", 0);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// ------------------------------------------------------------ weak labels

struct LabeledSoft {
    std::string id;
    SoftLabel soft;
};

void write_soft_labels(const fs::path& path, const std::vector<LabeledSoft>& labels) {
    std::vector<Json> rows;
    rows.reserve(labels.size());
    for (const auto& l : labels) {
        Json row;
        row["id"] = l.id;
        row["p0"] = l.soft.p0;
        row["p1"] = l.soft.p1;
        row["label"] = l.soft.hard();
        rows.push_back(std::move(row));
    }
    write_jsonl(path, rows);
}

std::vector<LabeledSoft> read_soft_labels(const fs::path& path) {
    auto rows = read_jsonl(path);
    std::vector<LabeledSoft> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = path.string() + ":" + std::to_string(i + 1);
        if (!row.contains("id") || !row["id"].is_string()) {
            throw DataError(where + ": missing string \"id\"");
        }
        LabeledSoft l;
        l.id = row["id"].get<std::string>();
        if (row.contains("p0") && row.contains("p1")) {
            l.soft = SoftLabel{row["p0"].get<double>(), row["p1"].get<double>()};
        } else if (row.contains("label") && row["label"].is_number_integer()) {
            l.soft = soft_from_hard(row["label"].get<int>());
        } else {
            throw DataError(where + ": need p0/p1 or label");
        }
        out.push_back(std::move(l));
    }
    return out;
}

SoftLabelMap soft_label_map(const std::vector<LabeledSoft>& labels) {
    SoftLabelMap map;
    for (const auto& l : labels) map[l.id] = l.soft;
    return map;
}

// Predictions with optional abstains, for eval input.
std::map<std::string, std::optional<int>> read_label_predictions(const fs::path& path) {
    auto rows = read_jsonl(path);
    std::map<std::string, std::optional<int>> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = path.string() + ":" + std::to_string(i + 1);
        std::string id;
        if (row.contains("id") && row["id"].is_string()) {
            id = row["id"].get<std::string>();
        } else if (row.contains("pair_id") && row["pair_id"].is_string()) {
            id = row["pair_id"].get<std::string>();
        } else {
            throw DataError(where + ": missing id");
        }
        std::optional<int> label;
        if (row.contains("label") && row["label"].is_number_integer()) {
            label = row["label"].get<int>();
        } else if (row.contains("p0") && row.contains("p1")) {
            label = SoftLabel{row["p0"].get<double>(), row["p1"].get<double>()}.hard();
        }
        if (!out.emplace(id, label).second) throw DataError(where + ": duplicate id " + id);
    }
    return out;
}

std::map<std::string, int> gold_of(const std::vector<BinaryPair>& pairs) {
    std::map<std::string, int> gold;
    for (const auto& p : pairs) gold[p.id] = p.label;
    return gold;
}

std::map<std::string, std::string> topics_of(const std::vector<BinaryPair>& pairs) {
    std::map<std::string, std::string> topics;
    for (const auto& p : pairs) {
        if (p.topic) topics[p.id] = *p.topic;
    }
    return topics;
}

// --------------------------------------------------------------- backends

GenerationParams generation_from(const Config& cfg, const std::string& section) {
    GenerationParams gen;
    gen.temperature = cfg.get_double(section + ".temperature", gen.temperature);
    gen.top_p = cfg.get_double(section + ".top_p", gen.top_p);
    gen.max_tokens = static_cast<int>(cfg.get_int(section + ".max_tokens", gen.max_tokens));
    if (gen.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (gen.top_p <= 0.0 || gen.top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
    if (gen.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    return gen;
}

struct BackendBundle {
    std::map<std::string, BackendPtr> by_role;
    std::shared_ptr<RecordingBackend> recorder;
    std::string record_path;

    Backend& role(const std::string& name) { return *by_role.at(name); }

    void finish() const {
        if (recorder && !record_path.empty()) recorder->save(record_path);
    }
};

// A role reads [backend.<role>] with fallback to [backend]. --fixture makes
// every role scripted from one table; --record wraps the (single) live
// backend and dumps the exchange table on completion.
BackendBundle build_backends(const Config& cfg, const std::vector<std::string>& roles) {
    BackendBundle bundle;
    if (cfg.has("fixture")) {
        auto scripted = load_fixture(cfg.require_string("fixture"),
                                     cfg.get_bool("strict_fixture", false),
                                     /*default_response=*/"");
        for (const auto& r : roles) bundle.by_role[r] = scripted;
        return bundle;
    }

    auto role_desc = [&](const std::string& role) {
        auto role_key = [&](const std::string& key, const std::string& dflt) {
            auto v = cfg.find("backend." + role + "." + key);
            if (v) return *v;
            return cfg.get_string("backend." + key, dflt);
        };
        BackendDescriptor desc;
        desc.kind = BackendDescriptor::Kind::http;
        desc.endpoint = role_key("endpoint", "");
        if (desc.endpoint.empty()) {
            const char* base = std::getenv("W2S_API_BASE");
            if (base && *base) desc.endpoint = base;
        }
        desc.model_name = role_key("model", "");
        desc.auth_env = role_key("auth_env", "W2S_API_KEY");
        desc.timeout_seconds =
            static_cast<int>(cfg.get_int("backend.timeout_seconds", desc.timeout_seconds));
        desc.max_retries = static_cast<int>(cfg.get_int("backend.max_retries", desc.max_retries));
        desc.retry_base_delay_ms = static_cast<int>(
            cfg.get_int("backend.retry_base_delay_ms", desc.retry_base_delay_ms));
        desc.header_as_system = cfg.get_bool("backend.header_as_system", false);
        desc.max_in_flight = static_cast<int>(cfg.get_int("max_in_flight", desc.max_in_flight));
        if (desc.endpoint.empty() || desc.model_name.empty()) {
            throw ConfigError("backend role \"" + role +
                              "\" needs endpoint and model (config or W2S_API_BASE), or --fixture");
        }
        return desc;
    };

    // Roles sharing a descriptor share one client (and its in-flight gate).
    std::map<std::string, BackendPtr> by_identity;
    std::set<std::string> descriptors_seen;
    for (const auto& r : roles) {
        BackendDescriptor desc = role_desc(r);
        std::string identity = desc.endpoint + "|" + desc.model_name + "|" + desc.auth_env;
        descriptors_seen.insert(identity);
        auto it = by_identity.find(identity);
        if (it == by_identity.end()) it = by_identity.emplace(identity, make_backend(desc)).first;
        bundle.by_role[r] = it->second;
    }
    if (cfg.has("record")) {
        if (descriptors_seen.size() > 1) {
            throw ConfigError("record mode needs all roles on one backend");
        }
        bundle.recorder = std::make_shared<RecordingBackend>(by_identity.begin()->second);
        for (auto& [_, b] : bundle.by_role) b = bundle.recorder;
        bundle.record_path = cfg.require_string("record");
    }
    return bundle;
}

TemplateSet templates_from(const Config& cfg) {
    if (cfg.has("templates")) return TemplateSet::load_dir(cfg.require_string("templates"));
    return TemplateSet::builtin();
}

}  // namespace

// ---------------------------------------------------------------- dataset

void cmd_dataset_prepare(const Config& cfg) {
    const std::uint64_t seed = require_seed(cfg);
    const fs::path out_dir = require_out_dir(cfg);
    const std::string input = cfg.require_string("dataset.input");

    SplitSizes sizes;
    sizes.train1 = static_cast<std::size_t>(cfg.get_int("dataset.train1", 5000));
    sizes.train2 = static_cast<std::size_t>(cfg.get_int("dataset.train2", 5000));
    sizes.valid = static_cast<std::size_t>(cfg.get_int("dataset.valid", 1000));
    sizes.test = static_cast<std::size_t>(cfg.get_int("dataset.test", 1000));

    auto raw = ingest_raw(input);
    auto pairs = to_binary_pairs(raw, seed);
    auto bundle = make_splits(pairs, sizes, seed);

    std::map<std::string, std::string> outputs;
    auto emit = [&](const char* name, const std::vector<BinaryPair>& split) {
        fs::path p = out_dir / name;
        write_pairs(p, split);
        outputs[name] = file_digest(p);
    };
    emit("train1.jsonl", bundle.train1);
    emit("train2.jsonl", bundle.train2);
    emit("valid.jsonl", bundle.valid);
    emit("test.jsonl", bundle.test);

    write_manifest(out_dir, "dataset prepare", cfg, {{input, file_digest(input)}}, outputs);
}

// --------------------------------------------------------------- ensemble

namespace {

struct SplitViews {
    FeatureView train1;
    FeatureView train2;
    FeatureView valid;
};

std::vector<int> gold_labels_for(const FeatureView& view, const std::vector<BinaryPair>& pairs) {
    std::unordered_map<std::string, int> by_id;
    for (const auto& p : pairs) by_id[p.id] = p.label;
    std::vector<int> labels;
    labels.reserve(view.size());
    for (const auto& id : view.ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("no gold label for feature id \"" + id + "\"");
        labels.push_back(it->second);
    }
    return labels;
}

FeatureView gather_rows(const FeatureView& view, const std::vector<std::size_t>& rows) {
    FeatureView out;
    out.source = view.source;
    out.dim = view.dim;
    out.ids.reserve(rows.size());
    out.data.reserve(rows.size() * view.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t r = rows[i];
        // Bootstrap repeats ids; suffix the duplicates to keep ids unique.
        std::string id = view.ids[r];
        out.ids.push_back(id + "#" + std::to_string(i));
        auto x = view.row(r);
        out.data.insert(out.data.end(), x.begin(), x.end());
    }
    return out;
}

SoftLabelMap hard_targets(const FeatureView& view, const std::vector<int>& labels) {
    SoftLabelMap map;
    for (std::size_t i = 0; i < view.size(); ++i) map[view.ids[i]] = soft_from_hard(labels[i]);
    return map;
}

// Targets keyed by the suffixed ids gather_rows produces.
SoftLabelMap gathered_targets(const FeatureView& gathered, const std::vector<std::size_t>& rows,
                              const std::vector<int>& labels) {
    SoftLabelMap map;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        map[gathered.ids[i]] = soft_from_hard(labels[rows[i]]);
    }
    return map;
}

}  // namespace

void cmd_ensemble_run(const Config& cfg) {
    const std::uint64_t seed = require_seed(cfg);
    const fs::path out_dir = require_out_dir(cfg);
    const std::string mode = cfg.get_string("ensemble.mode", "bagging");
    const std::string axis = cfg.get_string("ensemble.axis", "data");
    const int parallelism = static_cast<int>(cfg.get_int("max_in_flight", 8));

    std::map<std::string, std::string> inputs;
    auto track = [&](const std::string& path) {
        inputs[path] = file_digest(path);
        return path;
    };

    auto train1_pairs = read_pairs(track(cfg.require_string("data.train1_pairs")));

    ProbeConfig probe_cfg;
    probe_cfg.epochs = static_cast<int>(
        cfg.get_int("ensemble.probe_epochs", axis == "data" && mode == "bagging" ? 5 : 4));
    probe_cfg.batch_size = static_cast<int>(cfg.get_int("ensemble.batch_size", 32));
    probe_cfg.learning_rate = cfg.get_double("ensemble.learning_rate", 0.1);

    Json ensemble_manifest;
    ensemble_manifest["method"] = mode;

    // Per-member soft predictions for train2 and valid, plus the id lists.
    std::vector<std::vector<SoftLabel>> member_train2, member_valid;
    std::vector<std::string> train2_ids, valid_ids;
    Voting voting =
        cfg.get_string("ensemble.voting", "soft") == "hard" ? Voting::hard : Voting::soft;

    if (mode == "bagging") {
        const int num_models = static_cast<int>(cfg.get_int("ensemble.num_models", 1));
        if (num_models < 1) throw ConfigError("ensemble.num_models must be >= 1");
        member_train2.resize(static_cast<std::size_t>(num_models));
        member_valid.resize(static_cast<std::size_t>(num_models));
        Json member_seeds = Json::array();
        for (int i = 0; i < num_models; ++i) member_seeds.push_back(seed + i);
        ensemble_manifest["axis"] = axis;
        ensemble_manifest["num_models"] = num_models;
        ensemble_manifest["voting"] = voting == Voting::hard ? "hard" : "soft";
        ensemble_manifest["member_seeds"] = std::move(member_seeds);

        if (axis == "layers") {
            auto t1_files = split_list(cfg.require_string("ensemble.layer_train1"));
            auto t2_files = split_list(cfg.require_string("ensemble.layer_train2"));
            auto va_files = split_list(cfg.require_string("ensemble.layer_valid"));
            if (t1_files.size() != static_cast<std::size_t>(num_models) ||
                t2_files.size() != t1_files.size() || va_files.size() != t1_files.size()) {
                throw ConfigError("layer file lists must each have num_models entries");
            }
            for (const auto& f : t1_files) track(f);
            for (const auto& f : t2_files) track(f);
            for (const auto& f : va_files) track(f);
            parallel_for(t1_files.size(), parallelism, [&](std::size_t i) {
                FeatureView t1 = load_feature_view(t1_files[i]);
                FeatureView t2 = load_feature_view(t2_files[i]);
                FeatureView va = load_feature_view(va_files[i]);
                auto labels = gold_labels_for(t1, train1_pairs);
                ProbeConfig pc = probe_cfg;
                pc.seed = seed + i;
                LinearProbe probe = train_probe(t1, hard_targets(t1, labels), pc);
                member_train2[i] = predict_probe(probe, t2);
                member_valid[i] = predict_probe(probe, va);
                if (i == 0) {
                    train2_ids = t2.ids;
                    valid_ids = va.ids;
                }
            });
            // All layers must describe the same examples in the same order.
            for (std::size_t i = 1; i < t2_files.size(); ++i) {
                if (load_feature_view(t2_files[i]).ids != train2_ids) {
                    throw DataError("layer train2 files disagree on ids");
                }
                if (load_feature_view(va_files[i]).ids != valid_ids) {
                    throw DataError("layer valid files disagree on ids");
                }
            }
        } else {
            SplitViews views;
            views.train1 = load_feature_view(track(cfg.require_string("data.train1_features")));
            views.train2 = load_feature_view(track(cfg.require_string("data.train2_features")));
            views.valid = load_feature_view(track(cfg.require_string("data.valid_features")));
            auto labels = gold_labels_for(views.train1, train1_pairs);
            train2_ids = views.train2.ids;
            valid_ids = views.valid.ids;

            if (axis == "dims") {
                const double proportion = cfg.get_double("ensemble.dim_proportion", 0.5);
                parallel_for(static_cast<std::size_t>(num_models), parallelism,
                             [&](std::size_t i) {
                    FeatureView sub = select_feature_dims(views.train1, proportion, seed + i);
                    ProbeConfig pc = probe_cfg;
                    pc.seed = seed + i;
                    LinearProbe probe = train_probe(sub, hard_targets(sub, labels), pc);
                    // Recover the kept indices from the source tag.
                    std::string tag = sub.source;
                    std::vector<std::size_t> dims;
                    std::size_t at = tag.rfind("|dims:");
                    for (const auto& tok : split_list(tag.substr(at + 6))) {
                        dims.push_back(std::stoul(tok));
                    }
                    auto restrict_predict = [&](const FeatureView& full) {
                        std::vector<SoftLabel> preds;
                        preds.reserve(full.size());
                        std::vector<double> buf(dims.size());
                        for (std::size_t r = 0; r < full.size(); ++r) {
                            auto x = full.row(r);
                            for (std::size_t d = 0; d < dims.size(); ++d) buf[d] = x[dims[d]];
                            preds.push_back(predict_probe_row(probe, buf));
                        }
                        return preds;
                    };
                    member_train2[i] = restrict_predict(views.train2);
                    member_valid[i] = restrict_predict(views.valid);
                });
            } else if (axis == "data") {
                SamplerSpec sampler;
                const std::string sampler_name = cfg.get_string("ensemble.sampler", "bootstrap");
                if (sampler_name == "bootstrap") {
                    sampler.kind = SamplerSpec::Kind::bootstrap;
                } else if (sampler_name == "random_subset") {
                    sampler.kind = SamplerSpec::Kind::random_subset;
                } else if (sampler_name == "none") {
                    sampler.kind = SamplerSpec::Kind::none;
                } else {
                    throw ConfigError("unknown sampler: " + sampler_name);
                }
                sampler.n = static_cast<std::size_t>(
                    cfg.get_int("ensemble.sample_n",
                                static_cast<std::int64_t>(views.train1.size())));
                sampler.class_balanced = cfg.get_bool("ensemble.class_balanced", false);
                ensemble_manifest["sampler"] = sampler_name;
                ensemble_manifest["sample_n"] = sampler.n;

                parallel_for(static_cast<std::size_t>(num_models), parallelism,
                             [&](std::size_t i) {
                    const std::uint64_t member_seed = seed + i;
                    std::vector<std::size_t> all_rows(views.train1.size());
                    for (std::size_t r = 0; r < all_rows.size(); ++r) all_rows[r] = r;
                    std::vector<std::size_t> rows;
                    switch (sampler.kind) {
                        case SamplerSpec::Kind::bootstrap:
                            rows = bootstrap_sample(all_rows, sampler.n, member_seed).in_bag;
                            break;
                        case SamplerSpec::Kind::random_subset:
                            rows = random_subset(all_rows, labels, sampler.n,
                                                 sampler.class_balanced, member_seed)
                                       .selected;
                            break;
                        case SamplerSpec::Kind::none:
                            rows = all_rows;
                            break;
                    }
                    FeatureView sub = gather_rows(views.train1, rows);
                    ProbeConfig pc = probe_cfg;
                    pc.seed = member_seed;
                    LinearProbe probe =
                        train_probe(sub, gathered_targets(sub, rows, labels), pc);
                    member_train2[i] = predict_probe(probe, views.train2);
                    member_valid[i] = predict_probe(probe, views.valid);
                });
            } else {
                throw ConfigError("unknown ensemble axis: " + axis);
            }
        }
    } else if (mode == "adaboost" || mode == "gradboost") {
        SplitViews views;
        views.train1 = load_feature_view(track(cfg.require_string("data.train1_features")));
        views.train2 = load_feature_view(track(cfg.require_string("data.train2_features")));
        views.valid = load_feature_view(track(cfg.require_string("data.valid_features")));
        auto labels = gold_labels_for(views.train1, train1_pairs);
        train2_ids = views.train2.ids;
        valid_ids = views.valid.ids;
        const int rounds = static_cast<int>(cfg.get_int("ensemble.rounds", 3));

        member_train2.resize(1);
        member_valid.resize(1);
        if (mode == "adaboost") {
            WeightedFactory factory = [&](const std::vector<double>& weights, std::uint64_t s,
                                          int) -> HardClassifier {
                ProbeConfig pc = probe_cfg;
                pc.seed = s;
                LinearProbe probe =
                    train_probe(views.train1, hard_targets(views.train1, labels), pc, nullptr,
                                nullptr, weights);
                return [probe](std::span<const double> x) {
                    return predict_probe_row(probe, x).hard();
                };
            };
            AdaBoostModel model = train_adaboost(views.train1, labels, rounds, factory, seed);
            Json alphas = Json::array();
            for (const auto& r : model.rounds) alphas.push_back(r.alpha);
            ensemble_manifest["rounds"] = rounds;
            ensemble_manifest["alphas"] = std::move(alphas);

            auto predict_view = [&](const FeatureView& view) {
                std::vector<SoftLabel> preds;
                preds.reserve(view.size());
                for (std::size_t r = 0; r < view.size(); ++r) {
                    preds.push_back(soft_from_hard(model.predict(view.row(r))));
                }
                return preds;
            };
            member_train2[0] = predict_view(views.train2);
            member_valid[0] = predict_view(views.valid);
        } else {
            const double shrinkage = cfg.get_double("ensemble.shrinkage", 0.1);
            RegressionFactory factory = [&](const std::vector<double>& targets, std::uint64_t,
                                            int) -> Regressor {
                LinearProbe model = fit_ridge(views.train1, targets);
                return [model](std::span<const double> x) { return linear_value(model, x); };
            };
            GradBoostModel model =
                train_gradient_boost(views.train1, labels, rounds, shrinkage, factory, seed);
            ensemble_manifest["rounds"] = rounds;
            ensemble_manifest["shrinkage"] = shrinkage;

            auto predict_view = [&](const FeatureView& view) {
                std::vector<SoftLabel> preds;
                preds.reserve(view.size());
                for (std::size_t r = 0; r < view.size(); ++r) {
                    const double f = std::clamp(model.score(view.row(r)), 0.0, 1.0);
                    preds.push_back(SoftLabel{1.0 - f, f});
                }
                return preds;
            };
            member_train2[0] = predict_view(views.train2);
            member_valid[0] = predict_view(views.valid);
        }
    } else {
        throw ConfigError("unknown ensemble mode: " + mode);
    }

    // Vote member predictions into the weak-label files.
    auto combine = [&](const std::vector<std::vector<SoftLabel>>& members,
                       const std::vector<std::string>& ids) {
        std::vector<LabeledSoft> out;
        out.reserve(ids.size());
        for (std::size_t r = 0; r < ids.size(); ++r) {
            std::vector<SoftLabel> ballot;
            ballot.reserve(members.size());
            for (const auto& m : members) ballot.push_back(m[r]);
            SoftLabel soft;
            if (voting == Voting::soft) {
                soft = soft_vote(ballot).first;
            } else {
                std::vector<int> hard;
                hard.reserve(ballot.size());
                for (const auto& b : ballot) hard.push_back(b.hard());
                double share1 = 0.0;
                for (int v : hard) share1 += v;
                share1 /= static_cast<double>(hard.size());
                soft = SoftLabel{1.0 - share1, share1};
                // hard() of the vote share equals hard_vote by construction
            }
            out.push_back(LabeledSoft{ids[r], soft});
        }
        return out;
    };

    std::map<std::string, std::string> outputs;
    write_soft_labels(out_dir / "weak_train2.jsonl", combine(member_train2, train2_ids));
    write_soft_labels(out_dir / "weak_valid.jsonl", combine(member_valid, valid_ids));
    write_text_file(out_dir / "ensemble.json", ensemble_manifest.dump(2) + "\n");
    outputs["weak_train2.jsonl"] = file_digest(out_dir / "weak_train2.jsonl");
    outputs["weak_valid.jsonl"] = file_digest(out_dir / "weak_valid.jsonl");
    outputs["ensemble.json"] = file_digest(out_dir / "ensemble.json");
    write_manifest(out_dir, "ensemble run", cfg, inputs, outputs);
}

// ---------------------------------------------------------------- oversee

void cmd_oversee(const Config& cfg, const std::string& mode) {
    const std::uint64_t seed = require_seed(cfg);
    const fs::path out_dir = require_out_dir(cfg);

    SOConfig so;
    so.m = static_cast<int>(cfg.get_int("oversight.m", 5));
    so.n = static_cast<int>(cfg.get_int("oversight.n", 1));
    so.rounds = static_cast<int>(cfg.get_int("oversight.rounds", 3));
    so.runs = static_cast<int>(cfg.get_int("oversight.runs", 1));
    so.seed = seed;
    so.judge_each_round = cfg.get_bool("oversight.judge_each_round", false);
    so.max_in_flight = static_cast<int>(cfg.get_int("max_in_flight", 8));
    so.failure_cap = cfg.get_double("oversight.failure_cap", 0.1);
    so.generation = generation_from(cfg, "oversight");

    TemplateSet templates = templates_from(cfg);

    std::map<std::string, std::string> inputs;
    const std::string pairs_path = cfg.require_string("data.pairs");
    inputs[pairs_path] = file_digest(pairs_path);
    auto pairs = read_pairs(pairs_path);

    const std::vector<std::string> roles = mode == "interact"
                                               ? std::vector<std::string>{"aux", "weak"}
                                               : std::vector<std::string>{"aux_a", "aux_b", "weak"};
    BackendBundle backends = build_backends(cfg, roles);

    const int balance_per_class = static_cast<int>(cfg.get_int("oversight.balance_per_class", 0));

    auto one_run = [&](std::uint64_t run_seed, int run_id) {
        SOConfig run_cfg = so;
        run_cfg.seed = run_seed;
        std::vector<AnnotationRecord> records;
        if (mode == "interact") {
            auto examples = generate_context_examples(pairs, so.m, backends.role("weak"),
                                                      templates, run_seed, so.generation);
            records = interaction_annotate(pairs, examples, run_cfg, backends.role("aux"),
                                           backends.role("weak"), templates);
        } else {
            records = run_debate(pairs, run_cfg, backends.role("aux_a"), backends.role("aux_b"),
                                 backends.role("weak"), templates)
                          .first;
        }
        for (auto& r : records) r.run_id = run_id;
        return records;
    };

    std::map<std::string, std::string> outputs;
    auto add_output = [&](const fs::path& p) { outputs[p.filename().string()] = file_digest(p); };

    if (so.runs > 1) {
        auto voted = multi_run_vote(one_run, so.runs, seed);
        std::vector<Json> rows;
        std::vector<LabeledSoft> weak;
        for (const auto& v : voted) {
            Json row;
            row["pair_id"] = v.pair_id;
            row["label"] = v.label ? Json(*v.label) : Json(nullptr);
            row["votes0"] = v.votes0;
            row["votes1"] = v.votes1;
            row["abstains"] = v.abstains;
            rows.push_back(std::move(row));
            if (v.label) weak.push_back(LabeledSoft{v.pair_id, soft_from_hard(*v.label)});
        }
        if (balance_per_class > 0) {
            std::vector<AnnotationRecord> pseudo;
            pseudo.reserve(voted.size());
            for (const auto& v : voted) {
                AnnotationRecord r;
                r.pair_id = v.pair_id;
                r.extracted = v.label;
                pseudo.push_back(std::move(r));
            }
            auto balanced = balance_labels(pseudo, balance_per_class, seed);
            weak.clear();
            for (const auto& r : balanced) {
                weak.push_back(LabeledSoft{r.pair_id, soft_from_hard(*r.extracted)});
            }
        }
        write_jsonl(out_dir / "voted.jsonl", rows);
        write_soft_labels(out_dir / "weak_labels.jsonl", weak);
        add_output(out_dir / "voted.jsonl");
        add_output(out_dir / "weak_labels.jsonl");
    } else {
        auto records = one_run(seed, 0);
        write_annotation_records(records, out_dir / "records.jsonl",
                                 out_dir / "transcripts.jsonl");
        add_output(out_dir / "records.jsonl");
        add_output(out_dir / "transcripts.jsonl");

        std::vector<AnnotationRecord> kept;
        if (balance_per_class > 0) {
            kept = balance_labels(records, balance_per_class, seed);
        } else {
            for (const auto& r : records) {
                if (!r.failed && r.extracted) kept.push_back(r);
            }
        }
        std::vector<LabeledSoft> weak;
        weak.reserve(kept.size());
        for (const auto& r : kept) {
            weak.push_back(LabeledSoft{r.pair_id, soft_from_hard(*r.extracted)});
        }
        write_soft_labels(out_dir / "weak_labels.jsonl", weak);
        add_output(out_dir / "weak_labels.jsonl");
    }

    backends.finish();
    write_manifest(out_dir, "oversee " + mode, cfg, inputs, outputs);
}

// ---------------------------------------------------------------- student

void cmd_student_train(const Config& cfg) {
    const std::uint64_t seed = require_seed(cfg);
    const fs::path out_dir = require_out_dir(cfg);

    std::map<std::string, std::string> inputs;
    auto track = [&](const std::string& path) {
        inputs[path] = file_digest(path);
        return path;
    };

    auto weak_labels = read_soft_labels(track(cfg.require_string("data.weak_labels")));
    FeatureView train_features =
        load_feature_view(track(cfg.require_string("data.train_features")));
    FeatureView test_features = load_feature_view(track(cfg.require_string("data.test_features")));
    auto test_pairs = read_pairs(track(cfg.require_string("data.test_pairs")));

    // Weak labels may cover only part of the feature file (balancing).
    SoftLabelMap weak_map = soft_label_map(weak_labels);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < train_features.size(); ++i) {
        if (weak_map.count(train_features.ids[i])) rows.push_back(i);
    }
    if (rows.empty()) throw DataError("no overlap between weak labels and train features");
    FeatureView train_view = train_features;
    if (rows.size() != train_features.size()) {
        FeatureView sub;
        sub.source = train_features.source;
        sub.dim = train_features.dim;
        for (std::size_t r : rows) {
            sub.ids.push_back(train_features.ids[r]);
            auto x = train_features.row(r);
            sub.data.insert(sub.data.end(), x.begin(), x.end());
        }
        train_view = std::move(sub);
    }

    ProbeConfig pc;
    pc.epochs = static_cast<int>(cfg.get_int("student.epochs", 2));
    pc.batch_size = static_cast<int>(cfg.get_int("student.batch_size", 32));
    pc.learning_rate = cfg.get_double("student.learning_rate", 0.1);
    pc.early_stop = cfg.get_bool("student.early_stop", true);
    pc.patience = static_cast<int>(cfg.get_int("student.patience", 1));
    pc.seed = seed;

    FeatureView valid_features;
    SoftLabelMap valid_map;
    const bool has_valid = cfg.has("data.valid_features") && cfg.has("data.valid_weak_labels");
    if (has_valid) {
        valid_features = load_feature_view(track(cfg.require_string("data.valid_features")));
        valid_map = soft_label_map(read_soft_labels(track(cfg.require_string("data.valid_weak_labels"))));
        // Early stopping monitors agreement with the weak labels, so the
        // validation view must shrink to the ids the weak run labeled.
        std::vector<std::size_t> vrows;
        for (std::size_t i = 0; i < valid_features.size(); ++i) {
            if (valid_map.count(valid_features.ids[i])) vrows.push_back(i);
        }
        if (vrows.size() != valid_features.size()) {
            FeatureView sub;
            sub.source = valid_features.source;
            sub.dim = valid_features.dim;
            for (std::size_t r : vrows) {
                sub.ids.push_back(valid_features.ids[r]);
                auto x = valid_features.row(r);
                sub.data.insert(sub.data.end(), x.begin(), x.end());
            }
            valid_features = std::move(sub);
        }
    }

    LinearProbe student = train_probe(train_view, weak_map, pc,
                                      has_valid ? &valid_features : nullptr,
                                      has_valid ? &valid_map : nullptr);
    save_probe(out_dir / "student_probe.json", student, train_view.source, seed);

    // Student predictions on test.
    auto student_preds = predict_probe(student, test_features);
    std::map<std::string, std::optional<int>> strong_map;
    std::vector<LabeledSoft> strong_soft;
    for (std::size_t i = 0; i < test_features.size(); ++i) {
        strong_map[test_features.ids[i]] = student_preds[i].hard();
        strong_soft.push_back(LabeledSoft{test_features.ids[i], student_preds[i]});
    }
    write_soft_labels(out_dir / "student_test.jsonl", strong_soft);

    auto gold_test = gold_of(test_pairs);
    auto topics_test = topics_of(test_pairs);
    W2SReport report;
    report.strong = accuracy(strong_map, gold_test);
    report.strong.per_topic = per_topic(strong_map, gold_test, topics_test);

    // Weak side: prefer weak predictions on the test split; fall back to
    // grading the training weak labels against their own split's gold.
    if (cfg.has("data.weak_test_labels")) {
        auto weak_test = read_soft_labels(track(cfg.require_string("data.weak_test_labels")));
        std::map<std::string, std::optional<int>> weak_preds;
        for (const auto& l : weak_test) weak_preds[l.id] = l.soft.hard();
        report.weak = accuracy(weak_preds, gold_test);
        report.weak.per_topic = per_topic(weak_preds, gold_test, topics_test);
    } else {
        auto train_pairs = read_pairs(track(cfg.require_string("data.train_pairs")));
        auto gold_train = gold_of(train_pairs);
        std::map<std::string, std::optional<int>> weak_preds;
        for (const auto& l : weak_labels) weak_preds[l.id] = l.soft.hard();
        report.weak = accuracy(weak_preds, gold_train);
        report.weak.per_topic = per_topic(weak_preds, gold_train, topics_of(train_pairs));
    }
    report.delta = report.strong.accuracy - report.weak.accuracy;
    report.config_fingerprint = cfg.fingerprint();
    emit_report(report, out_dir / "report.json", ReportFormat::json);

    std::map<std::string, std::string> outputs;
    for (const char* name : {"student_probe.json", "student_test.jsonl", "report.json"}) {
        outputs[name] = file_digest(out_dir / name);
    }
    write_manifest(out_dir, "student train", cfg, inputs, outputs);
}

// -------------------------------------------------------------------- icl

void cmd_icl_run(const Config& cfg) {
    const std::uint64_t seed = require_seed(cfg);
    const fs::path out_dir = require_out_dir(cfg);

    std::map<std::string, std::string> inputs;
    auto track = [&](const std::string& path) {
        inputs[path] = file_digest(path);
        return path;
    };

    auto pool_pairs = read_pairs(track(cfg.require_string("data.pool_pairs")));
    auto pool_labels = read_soft_labels(track(cfg.require_string("data.pool_labels")));
    auto query_pairs = read_pairs(track(cfg.require_string("data.query_pairs")));

    ICLConfig icl;
    icl.k = static_cast<int>(cfg.get_int("icl.k", 5));
    const std::string style = cfg.get_string("icl.style", "basic");
    if (style == "basic") {
        icl.style = PromptStyle::basic;
    } else if (style == "confidence") {
        icl.style = PromptStyle::confidence;
    } else {
        throw ConfigError("unknown icl style: " + style);
    }
    const std::string retriever = cfg.get_string("icl.retriever", "random");
    if (retriever == "random") {
        icl.retriever = Retriever::random;
    } else if (retriever == "bm25") {
        icl.retriever = Retriever::bm25;
    } else if (retriever == "topk") {
        icl.retriever = Retriever::topk;
    } else if (retriever == "votek") {
        icl.retriever = Retriever::votek;
    } else {
        throw ConfigError("unknown icl retriever: " + retriever);
    }
    icl.seed = seed;
    icl.similar_first = cfg.get_bool("icl.similar_first", true);
    icl.max_in_flight = static_cast<int>(cfg.get_int("max_in_flight", 8));

    RetrieverParams params;
    params.k1 = cfg.get_double("icl.k1", params.k1);
    params.b = cfg.get_double("icl.b", params.b);
    params.rho = cfg.get_double("icl.rho", params.rho);
    params.neighbors = static_cast<int>(cfg.get_int("icl.neighbors", params.neighbors));

    // Shot pool: pool pairs x weak labels; confidence is the weak teacher's
    // own probability for its pick.
    std::unordered_map<std::string, const BinaryPair*> pair_by_id;
    for (const auto& p : pool_pairs) pair_by_id[p.id] = &p;
    std::vector<Shot> pool;
    pool.reserve(pool_labels.size());
    for (const auto& l : pool_labels) {
        auto it = pair_by_id.find(l.id);
        if (it == pair_by_id.end()) {
            throw DataError("pool label for unknown pair \"" + l.id + "\"");
        }
        Shot shot;
        shot.pair = *it->second;
        shot.pseudo_label = l.soft.hard();
        shot.confidence = std::max(l.soft.p0, l.soft.p1);
        pool.push_back(std::move(shot));
    }

    TemplateSet templates = templates_from(cfg);
    BackendBundle backends = build_backends(cfg, {"icl"});

    auto predictions = run_icl(query_pairs, pool, icl, params, backends.role("icl"), templates);

    std::vector<Json> pred_rows, prompt_rows;
    std::map<std::string, std::optional<int>> pred_map;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& p = predictions[i];
        Json row;
        row["pair_id"] = p.pair_id;
        if (p.soft) {
            row["p0"] = p.soft->p0;
            row["p1"] = p.soft->p1;
            row["label"] = p.soft->hard();
            pred_map[p.pair_id] = p.soft->hard();
        } else {
            row["p0"] = nullptr;
            row["p1"] = nullptr;
            row["label"] = nullptr;
            pred_map[p.pair_id] = std::nullopt;
        }
        row["prompt_ref"] = "prompts.jsonl#" + std::to_string(i);
        pred_rows.push_back(std::move(row));
        prompt_rows.push_back(Json{{"pair_id", p.pair_id}, {"prompt", p.prompt}});
    }
    write_jsonl(out_dir / "predictions.jsonl", pred_rows);
    write_jsonl(out_dir / "prompts.jsonl", prompt_rows);

    auto gold = gold_of(query_pairs);
    W2SReport report;
    report.strong = accuracy(pred_map, gold);
    report.strong.per_topic = per_topic(pred_map, gold, topics_of(query_pairs));
    // The weak side of an ICL report grades the shot pool's pseudo labels.
    std::map<std::string, std::optional<int>> pool_preds;
    for (const auto& l : pool_labels) pool_preds[l.id] = l.soft.hard();
    report.weak = accuracy(pool_preds, gold_of(pool_pairs));
    report.delta = report.strong.accuracy - report.weak.accuracy;
    report.config_fingerprint = cfg.fingerprint();
    emit_report(report, out_dir / "report.json", ReportFormat::json);

    backends.finish();
    std::map<std::string, std::string> outputs;
    for (const char* name : {"predictions.jsonl", "prompts.jsonl", "report.json"}) {
        outputs[name] = file_digest(out_dir / name);
    }
    write_manifest(out_dir, "icl run", cfg, inputs, outputs);
}

// ------------------------------------------------------------------- eval

void cmd_eval_report(const Config& cfg) {
    const fs::path out_dir = require_out_dir(cfg);

    std::map<std::string, std::string> inputs;
    auto track = [&](const std::string& path) {
        inputs[path] = file_digest(path);
        return path;
    };

    auto gold_pairs = read_pairs(track(cfg.require_string("eval.gold")));
    auto gold = gold_of(gold_pairs);
    auto topics = topics_of(gold_pairs);

    auto preds = read_label_predictions(track(cfg.require_string("eval.pred")));
    W2SReport report;
    report.strong = accuracy(preds, gold);
    report.strong.per_topic = per_topic(preds, gold, topics);

    if (cfg.has("eval.weak_pred")) {
        auto weak = read_label_predictions(track(cfg.require_string("eval.weak_pred")));
        report.weak = accuracy(weak, gold);
        report.weak.per_topic = per_topic(weak, gold, topics);
        report.delta = report.strong.accuracy - report.weak.accuracy;
    }
    report.config_fingerprint = cfg.fingerprint();

    const std::string format = cfg.get_string("eval.format", "json");
    std::map<std::string, std::string> outputs;
    if (format == "json") {
        emit_report(report, out_dir / "report.json", ReportFormat::json);
        outputs["report.json"] = file_digest(out_dir / "report.json");
    } else if (format == "csv") {
        emit_report(report, out_dir / "report.csv", ReportFormat::csv);
        outputs["report.csv"] = file_digest(out_dir / "report.csv");
    } else {
        throw ConfigError("unknown report format: " + format);
    }
    write_manifest(out_dir, "eval report", cfg, inputs, outputs);
}

}  // namespace w2s
