#include "bikevol/core/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "bikevol/core/errors.hpp"

namespace bikevol::csv {

size_t Table::column(std::string_view name) const {
    if (auto idx = find_column(name)) return *idx;
    throw DataError(source + ": missing column '" + std::string(name) + "'");
}

std::optional<size_t> Table::find_column(std::string_view name) const {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::string Table::where(size_t row) const {
    return source + ":" + std::to_string(row < lines.size() ? lines[row] : 0);
}

Table parse(std::istream& in, std::string source) {
    Table table;
    table.source = std::move(source);

    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    size_t line = 1;
    size_t record_line = 1;
    bool have_header = false;

    auto finish_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        const bool blank = record.size() == 1 && record[0].empty() && !field_started;
        if (!blank) {
            if (!have_header) {
                table.header = std::move(record);
                have_header = true;
            } else {
                if (record.size() != table.header.size()) {
                    throw DataError(table.source + ":" + std::to_string(record_line) +
                                    ": expected " + std::to_string(table.header.size()) +
                                    " fields, found " + std::to_string(record.size()));
                }
                table.rows.push_back(std::move(record));
                table.lines.push_back(record_line);
            }
        }
        record.clear();
        field_started = false;
    };

    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                finish_record();
                ++line;
                record_line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) throw DataError(table.source + ": unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) finish_record();
    if (!have_header) throw DataError(table.source + ": missing header row");
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse(in, path);
}

void require_header(const Table& table, const std::vector<std::string>& expected) {
    if (table.header == expected) return;
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw DataError(table.source + ":1: schema mismatch, expected header '" + want + "'");
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

std::string format_number(double value) {
    if (std::isnan(value)) return "";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

double parse_number(std::string_view text, const Table& table, size_t row) {
    if (text.empty()) return std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError(table.where(row) + ": not a number '" + std::string(text) + "'");
    }
    return value;
}

long long parse_integer(std::string_view text, const Table& table, size_t row) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError(table.where(row) + ": not an integer '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace bikevol::csv
