// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace risgnn {

// Minimal CSV table with a versioned comment preamble. Values are kept as
// strings; numeric formatting is the writer's concern.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

// Schema tag written as the first line ("# risgnn-csv v1").
extern const char* const kCsvSchemaTag;

std::string format_double(double v);  // shortest round-trip representation

void write_csv(const CsvTable& table, const std::string& path);
// Throws DataError on missing file, malformed rows, or unknown schema tag.
CsvTable read_csv(const std::string& path);

}  // namespace risgnn
