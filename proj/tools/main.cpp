// w2s: weak-to-strong generalization experiment harness.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 backend failure,
// 5 failure cap exceeded, 1 anything else.

#include <cstdio>
#include <functional>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "w2s/commands.hpp"
#include "w2s/common.hpp"
#include "w2s/config.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string seed;
    std::string out;
    std::string max_in_flight;
    std::string fixture;
    bool strict_fixture = false;
    std::string record;
    std::string templates;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "config file (sectioned key = value)");
    cmd->add_option("--seed", flags.seed, "global seed, overrides the config");
    cmd->add_option("--out", flags.out, "output directory, overrides the config");
    cmd->add_option("--max-in-flight", flags.max_in_flight, "bound on concurrent backend calls");
    cmd->add_option("--fixture", flags.fixture, "scripted backend fixture (replay mode)");
    cmd->add_flag("--strict-fixture", flags.strict_fixture, "fixture misses are fatal");
    cmd->add_option("--record", flags.record, "record live exchanges to this fixture file");
    cmd->add_option("--templates", flags.templates, "prompt template directory");
}

// Flags win over config-file values.
w2s::Config resolve(const CommonFlags& flags) {
    w2s::Config cfg;
    if (!flags.config_path.empty()) cfg = w2s::Config::parse_file(flags.config_path);
    if (!flags.seed.empty()) cfg.set("seed", flags.seed);
    if (!flags.out.empty()) cfg.set("out", flags.out);
    if (!flags.max_in_flight.empty()) cfg.set("max_in_flight", flags.max_in_flight);
    if (!flags.fixture.empty()) cfg.set("fixture", flags.fixture);
    if (flags.strict_fixture) cfg.set("strict_fixture", "true");
    if (!flags.record.empty()) cfg.set("record", flags.record);
    if (!flags.templates.empty()) cfg.set("templates", flags.templates);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak-to-strong generalization experiment harness"};
    app.require_subcommand(1);

    // The chosen leaf stores its action here; it runs after parsing so CLI
    // errors and command errors map to different exit codes.
    std::function<void()> action;

    auto* dataset = app.add_subcommand("dataset", "dataset ingestion and splits");
    dataset->require_subcommand(1);
    auto ds_flags = std::make_shared<CommonFlags>();
    auto* ds_prepare = dataset->add_subcommand("prepare", "ingest, binarize, split");
    add_common(ds_prepare, *ds_flags);
    ds_prepare->callback(
        [&action, ds_flags] { action = [ds_flags] { w2s::cmd_dataset_prepare(resolve(*ds_flags)); }; });

    auto* ensemble = app.add_subcommand("ensemble", "weak-teacher ensembles");
    ensemble->require_subcommand(1);
    auto en_flags = std::make_shared<CommonFlags>();
    auto en_mode = std::make_shared<std::string>();
    auto* en_run = ensemble->add_subcommand("run", "train members, emit weak labels");
    add_common(en_run, *en_flags);
    en_run->add_option("--mode", *en_mode, "bagging | adaboost | gradboost");
    en_run->callback([&action, en_flags, en_mode] {
        action = [en_flags, en_mode] {
            w2s::Config cfg = resolve(*en_flags);
            if (!en_mode->empty()) cfg.set("ensemble.mode", *en_mode);
            w2s::cmd_ensemble_run(cfg);
        };
    });

    auto* oversee = app.add_subcommand("oversee", "scalable-oversight annotation");
    oversee->require_subcommand(1);
    for (const std::string mode : {"interact", "debate"}) {
        auto ov_flags = std::make_shared<CommonFlags>();
        auto ov_runs = std::make_shared<std::string>();
        auto* leaf = oversee->add_subcommand(
            mode, mode == "interact" ? "interaction annotation" : "multi-agent debate");
        add_common(leaf, *ov_flags);
        leaf->add_option("--runs", *ov_runs, "annotation runs to vote over");
        leaf->callback([&action, ov_flags, ov_runs, mode] {
            action = [ov_flags, ov_runs, mode] {
                w2s::Config cfg = resolve(*ov_flags);
                if (!ov_runs->empty()) cfg.set("oversight.runs", *ov_runs);
                w2s::cmd_oversee(cfg, mode);
            };
        });
    }

    auto* student = app.add_subcommand("student", "strong-student training");
    student->require_subcommand(1);
    auto st_flags = std::make_shared<CommonFlags>();
    auto* st_train = student->add_subcommand("train", "fit the student on weak labels");
    add_common(st_train, *st_flags);
    st_train->callback(
        [&action, st_flags] { action = [st_flags] { w2s::cmd_student_train(resolve(*st_flags)); }; });

    auto* icl = app.add_subcommand("icl", "in-context learning");
    icl->require_subcommand(1);
    auto icl_flags = std::make_shared<CommonFlags>();
    auto icl_retriever = std::make_shared<std::string>();
    auto icl_style = std::make_shared<std::string>();
    auto* icl_run = icl->add_subcommand("run", "shot retrieval, prompting, prediction");
    add_common(icl_run, *icl_flags);
    icl_run->add_option("--retriever", *icl_retriever, "random | bm25 | topk | votek");
    icl_run->add_option("--style", *icl_style, "basic | confidence");
    icl_run->callback([&action, icl_flags, icl_retriever, icl_style] {
        action = [icl_flags, icl_retriever, icl_style] {
            w2s::Config cfg = resolve(*icl_flags);
            if (!icl_retriever->empty()) cfg.set("icl.retriever", *icl_retriever);
            if (!icl_style->empty()) cfg.set("icl.style", *icl_style);
            w2s::cmd_icl_run(cfg);
        };
    });

    auto* eval = app.add_subcommand("eval", "evaluation");
    eval->require_subcommand(1);
    auto ev_flags = std::make_shared<CommonFlags>();
    auto* ev_report = eval->add_subcommand("report", "grade predictions against gold");
    add_common(ev_report, *ev_flags);
    ev_report->callback(
        [&action, ev_flags] { action = [ev_flags] { w2s::cmd_eval_report(resolve(*ev_flags)); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        action();
    } catch (const w2s::FailureCapError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 5;
    } catch (const w2s::BackendError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const w2s::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const w2s::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
