#ifndef WDMVLC_CSV_HPP
#define WDMVLC_CSV_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace wdmvlc::csv {

/// Minimal comma-separated table: one header row, unquoted cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws ConfigError if absent.
    std::size_t column(const std::string& name) const;
};

Table read(const std::filesystem::path& path);
Table parse(const std::string& text, const std::string& origin = "<string>");

/// Strict numeric parse: the whole cell must be consumed.
double to_double(const std::string& cell, const std::string& context);

/// Shortest text that round-trips through strtod: 17 significant digits.
std::string fmt_num(double v);

std::vector<std::string> split(const std::string& line, char sep = ',');
std::string trim(const std::string& s);

}  // namespace wdmvlc::csv

#endif
