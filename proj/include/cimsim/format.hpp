#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cimsim/error.hpp"

namespace cimsim {

/// Shortest stable text for a double in reports (10 significant digits).
inline std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Column-named table of already-formatted cells. Sweeps fill one, then the
/// CSV and the plots are both rendered from it.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        fail(ErrorCategory::internal, "table has no column '" + std::string(name) + "'");
    }

    void add(std::vector<std::string> row) {
        if (row.size() != header.size())
            fail(ErrorCategory::internal, "table row width does not match the header");
        rows.push_back(std::move(row));
    }

    void write_csv(std::ostream& os) const {
        auto emit = [&os](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) os << ',';
                os << cells[i];
            }
            os << '\n';
        };
        emit(header);
        for (const auto& r : rows) emit(r);
    }
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorCategory::io, "write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace cimsim
