#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "polyrag/errors.hpp"
#include "polyrag/util.hpp"

namespace polyrag {

using Json = nlohmann::json;

// Reads a line-delimited record file. Blank lines are skipped; every other
// line must hold one JSON object. Errors carry the 1-based line number.
inline std::vector<std::pair<long, Json>> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::vector<std::pair<long, Json>> rows;
    std::string line;
    long no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (trim(line).empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw DataError(std::string("malformed record: ") + e.what(), no);
        }
        if (!j.is_object()) throw DataError("record is not an object", no);
        rows.emplace_back(no, std::move(j));
    }
    return rows;
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
    std::ostringstream out;
    for (const auto& j : rows) out << j.dump() << '\n';
    write_file_atomic(path, out.str());
}

} // namespace polyrag
