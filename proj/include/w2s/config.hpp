#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace w2s {

/// Sectioned key-value config: `[section]` headers, `key = value` lines,
/// `#` or `;` comments, blank lines ignored. Keys are addressed as
/// "section.key"; keys above any header live in section "".
class Config {
  public:
    static Config parse_string(const std::string& text);
    static Config parse_file(const std::filesystem::path& path);

    bool has(const std::string& dotted) const;
    std::optional<std::string> find(const std::string& dotted) const;

    std::string get_string(const std::string& dotted, const std::string& fallback) const;
    std::string require_string(const std::string& dotted) const;
    std::int64_t get_int(const std::string& dotted, std::int64_t fallback) const;
    double get_double(const std::string& dotted, double fallback) const;
    bool get_bool(const std::string& dotted, bool fallback) const;
    std::uint64_t get_u64(const std::string& dotted, std::uint64_t fallback) const;

    /// Flag overrides land here; set wins over the parsed file.
    void set(const std::string& dotted, const std::string& value);

    /// Canonical serialization: sections and keys sorted, one key per line.
    std::string canonical() const;
    /// sha256 of canonical(); embedded in manifests and reports.
    std::string fingerprint() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;  // dotted key -> value
};

}  // namespace w2s
