#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "nustab/errors.hpp"

namespace nustab {

// CSV cells are integers, doubles printed with 17 significant digits (enough
// to round-trip IEEE doubles, so identical runs produce byte-identical
// files), bare strings, or empty.
struct CsvEmpty {};
using CsvCell = std::variant<long long, double, std::string, CsvEmpty>;
using CsvRow = std::vector<CsvCell>;

inline std::string format_cell(const CsvCell& c) {
    char buf[40];
    if (std::holds_alternative<long long>(c)) {
        std::snprintf(buf, sizeof(buf), "%lld", std::get<long long>(c));
    } else if (std::holds_alternative<double>(c)) {
        std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(c));
    } else if (std::holds_alternative<std::string>(c)) {
        return std::get<std::string>(c);
    } else {
        return "";
    }
    return buf;
}

inline std::string csv_to_string(const std::string& header,
                                 const std::vector<CsvRow>& rows) {
    std::string out = header;
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_cell(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<CsvRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << csv_to_string(header, rows);
}

} // namespace nustab
