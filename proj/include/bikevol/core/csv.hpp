#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bikevol::csv {

/// Header-first RFC 4180 table. Rows keep their 1-based source line for diagnostics.
struct Table {
    std::string source;  // file name used in error messages
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<size_t> lines;

    // Index of a header column; throws DataError naming the file if absent.
    size_t column(std::string_view name) const;
    std::optional<size_t> find_column(std::string_view name) const;
    // "file:line" for row i.
    std::string where(size_t row) const;
};

Table parse(std::istream& in, std::string source);
Table read_file(const std::string& path);

// Throws DataError unless the header equals `expected` exactly.
void require_header(const Table& table, const std::vector<std::string>& expected);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest text that parses back to the identical double; NaN renders as "".
std::string format_number(double value);
// Empty text parses as NaN (a missing cell).
double parse_number(std::string_view text, const Table& table, size_t row);
long long parse_integer(std::string_view text, const Table& table, size_t row);

}  // namespace bikevol::csv
