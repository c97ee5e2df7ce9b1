#include "w2s/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "w2s/common.hpp"

namespace w2s {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("short write: " + path.string());
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::vector<Json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": blank line");
        }
        Json row = Json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string jsonl_bytes(const std::vector<Json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out += '\n';
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
    write_text_file(path, jsonl_bytes(rows));
}

}  // namespace w2s
