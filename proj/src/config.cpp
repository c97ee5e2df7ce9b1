#include "w2s/config.hpp"

#include <algorithm>
#include <cctype>

#include "w2s/common.hpp"
#include "w2s/jsonl.hpp"

namespace w2s {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::string section;
    std::size_t lineno = 0;
    std::size_t at = 0;
    while (at <= text.size()) {
        std::size_t end = text.find('\n', at);
        std::string line = text.substr(at, end == std::string::npos ? std::string::npos : end - at);
        at = end == std::string::npos ? text.size() + 1 : end + 1;
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
            }
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        std::string dotted = section.empty() ? key : section + "." + key;
        cfg.entries_[dotted] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    try {
        return parse_string(read_text_file(path));
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

bool Config::has(const std::string& dotted) const { return entries_.count(dotted) > 0; }

std::optional<std::string> Config::find(const std::string& dotted) const {
    auto it = entries_.find(dotted);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::string Config::get_string(const std::string& dotted, const std::string& fallback) const {
    auto v = find(dotted);
    return v ? *v : fallback;
}

std::string Config::require_string(const std::string& dotted) const {
    auto v = find(dotted);
    if (!v || v->empty()) throw ConfigError("missing required config key: " + dotted);
    return *v;
}

std::int64_t Config::get_int(const std::string& dotted, std::int64_t fallback) const {
    auto v = find(dotted);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        std::int64_t parsed = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing text");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key " + dotted + ": \"" + *v + "\" is not an integer");
    }
}

std::uint64_t Config::get_u64(const std::string& dotted, std::uint64_t fallback) const {
    auto v = find(dotted);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        std::uint64_t parsed = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing text");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key " + dotted + ": \"" + *v + "\" is not an unsigned integer");
    }
}

double Config::get_double(const std::string& dotted, double fallback) const {
    auto v = find(dotted);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        double parsed = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing text");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key " + dotted + ": \"" + *v + "\" is not a number");
    }
}

bool Config::get_bool(const std::string& dotted, bool fallback) const {
    auto v = find(dotted);
    if (!v) return fallback;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("config key " + dotted + ": \"" + *v + "\" is not a boolean");
}

void Config::set(const std::string& dotted, const std::string& value) {
    entries_[dotted] = value;
}

std::string Config::canonical() const {
    // std::map keeps entries sorted by dotted key already.
    std::string out;
    for (const auto& [key, value] : entries_) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

std::string Config::fingerprint() const { return sha256_hex(canonical()); }

}  // namespace w2s
