#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "w2s/config.hpp"

namespace w2s {

/// Subcommand bodies. Every command reads its parameters from the resolved
/// config (file + flag overrides), writes its outputs plus a manifest.json
/// under the out directory, and throws the module error types; the exit-code
/// mapping lives in the binary's main.

void cmd_dataset_prepare(const Config& cfg);
void cmd_ensemble_run(const Config& cfg);
void cmd_oversee(const Config& cfg, const std::string& mode);  // "interact" | "debate"
void cmd_student_train(const Config& cfg);
void cmd_icl_run(const Config& cfg);
void cmd_eval_report(const Config& cfg);

/// manifest.json: {command, seed, config fingerprint, resolved config,
/// input digests, output digests}. Deterministic bytes for fixed inputs.
void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    const Config& cfg, const std::map<std::string, std::string>& inputs,
                    const std::map<std::string, std::string>& outputs);

/// sha256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

}  // namespace w2s
