#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace olss::eval {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string format_double(double v);  // %.17g, bit-faithful on re-parse

void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Reads a CSV written by write_csv; rejects ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

double parse_double(const std::string& field);

}  // namespace olss::eval
