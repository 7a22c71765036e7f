#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace courtside {

struct CsvRow {
    std::size_t line = 0;  // 1-based line number in the file
    std::vector<std::string> fields;
};

struct CsvFile {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
};

// Comma-separated, no quoting; fields are whitespace-trimmed, blank lines skipped.
CsvFile read_csv(const std::filesystem::path& path);

std::optional<double> parse_double(const std::string& s);
std::optional<long> parse_long(const std::string& s);

}  // namespace courtside
