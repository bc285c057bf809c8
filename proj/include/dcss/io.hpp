#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace dcss {

// Floats serialize with 9 significant digits everywhere, so identical inputs
// produce byte-identical files.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

inline std::string cell_to_csv(const Cell& c) {
    if (std::holds_alternative<std::monostate>(c)) return "";
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return csv_escape(std::get<std::string>(c));
}

}  // namespace detail

inline std::string table_to_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << detail::csv_escape(t.columns[i]);
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << detail::cell_to_csv(row[i]);
        os << '\n';
    }
    return os.str();
}

// One JSON object per line; unset cells are omitted.
inline std::string table_to_jsonl(const Table& t) {
    std::ostringstream os;
    for (const auto& row : t.rows) {
        os << '{';
        bool first = true;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (std::holds_alternative<std::monostate>(row[i])) continue;
            if (!first) os << ',';
            first = false;
            os << '"' << detail::json_escape(t.columns[i]) << "\":";
            if (const auto* d = std::get_if<double>(&row[i]))
                os << format_double(*d);
            else if (const auto* n = std::get_if<long long>(&row[i]))
                os << *n;
            else
                os << '"' << detail::json_escape(std::get<std::string>(row[i])) << '"';
        }
        os << "}\n";
    }
    return os.str();
}

enum class OutputFormat { csv, jsonl };

inline void write_table(const Table& t, const std::string& path, OutputFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << (format == OutputFormat::csv ? table_to_csv(t) : table_to_jsonl(t));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dcss
