#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace w2s {

// ordered_json keeps insertion order on dump, so serialized output is
// byte-stable and matches the documented field order.
using Json = nlohmann::ordered_json;

/// Parse a JSONL file, one object per line. Blank lines are rejected.
/// Parse failures report the 1-based line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Write one compact JSON object per line, UTF-8 with LF endings.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

/// Serialize rows to the exact bytes write_jsonl would produce.
std::string jsonl_bytes(const std::vector<Json>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace w2s
