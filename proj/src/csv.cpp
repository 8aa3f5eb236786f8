// SPDX-License-Identifier: Apache-2.0
#include "risgnn/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "risgnn/errors.hpp"

namespace risgnn {

const char* const kCsvSchemaTag = "# risgnn-csv v1";

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_csv(const CsvTable& table, const std::string& path) {
    if (table.columns.empty()) throw std::invalid_argument("write_csv: no columns");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("write_csv: cannot open " + path);
    out << kCsvSchemaTag << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out << table.columns[i] << (i + 1 < table.columns.size() ? "," : "\n");
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw std::invalid_argument("write_csv: row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
    if (!out) throw DataError("write_csv: write failed on " + path);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("read_csv: missing file " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("read_csv: empty file " + path);
    if (line != kCsvSchemaTag) throw DataError("read_csv: unknown schema in " + path);
    CsvTable table;
    if (!std::getline(in, line)) throw DataError("read_csv: missing header in " + path);
    table.columns = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_line(line);
        if (row.size() != table.columns.size())
            throw DataError("read_csv: ragged row in " + path);
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace risgnn
