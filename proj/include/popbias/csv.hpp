#pragma once

// Minimal CSV/JSON artifact I/O. Fields written by this project never contain
// separators or quotes, so no quoting is performed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "popbias/error.hpp"

namespace popbias {

/// Fixed six-decimal rendering used for every real-valued CSV column.
inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

class CsvBuilder {
public:
    explicit CsvBuilder(std::string_view header) { out_ << header << '\n'; }

    template <class... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((out_ << (first ? "" : ",") << field(fields), first = false), ...);
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    static std::string field(double v) { return fmt6(v); }
    static std::string field(const std::string& s) { return s; }
    static std::string field(std::string_view s) { return std::string(s); }
    static std::string field(const char* s) { return s; }
    template <class T>
    static std::string field(const T& v) { return std::to_string(v); }

    std::ostringstream out_;
};

/// Writes `content` to `path` through a temporary file and a rename, so the
/// file is either absent or complete.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError(path.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw DataError(path.string() + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == name) return c;
        }
        throw DataError("missing CSV column '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    while (true) {
        const auto pos = line.find(',');
        out.emplace_back(line.substr(0, pos));
        if (pos == std::string_view::npos) break;
        line.remove_prefix(pos + 1);
    }
    return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError(path.filename().string() + " not found");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty CSV file");
    t.header = split_csv_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        t.rows.push_back(split_csv_line(line));
        if (t.rows.back().size() != t.header.size()) {
            throw ParseError(line_no, "expected " + std::to_string(t.header.size()) + " fields", path.string());
        }
    }
    return t;
}

}  // namespace popbias
