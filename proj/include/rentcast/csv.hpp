#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rentcast::csv {

/// Parsed delimited file: header plus rows, with 1-based source line numbers.
struct Table {
    std::string name;  // file name for error messages
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lines;
};

/// Comma-delimited, UTF-8, header row; supports double-quoted fields.
/// Throws IngestError on unreadable files or ragged rows.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string name);

std::vector<std::string> split_line(std::string_view line);
std::string escape(std::string_view field);
void write_row(std::ostream& os, const std::vector<std::string>& fields);

}  // namespace rentcast::csv
