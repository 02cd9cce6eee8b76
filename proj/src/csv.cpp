#include "wdmvlc/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "wdmvlc/error.hpp"

namespace wdmvlc::csv {

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ConfigError("missing column '" + name + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

Table parse(const std::string& text, const std::string& origin) {
    Table t;
    std::istringstream is(text);
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ConfigError(fmt::format("{}: row has {} cells, header has {}", origin,
                                          cells.size(), t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    if (!have_header) throw ConfigError(origin + ": empty file");
    return t;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

double to_double(const std::string& cell, const std::string& context) {
    const std::string s = trim(cell);
    if (s.empty()) throw ConfigError(context + ": empty numeric field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw ConfigError(context + ": not a number: '" + s + "'");
    return v;
}

std::string fmt_num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace wdmvlc::csv
