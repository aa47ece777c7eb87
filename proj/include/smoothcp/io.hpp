#pragma once

// Plain CSV for matrices (one signal per row, no header) and shortest
// round-trip number formatting for every emitted value.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "smoothcp/error.hpp"
#include "smoothcp/model.hpp"

namespace smoothcp {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::logic_error("format_double: buffer too small");
    return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ValidationError("not a number: '" + std::string(text) + "'");
    return v;
}

/// Rows of comma-separated numbers; blank lines are skipped.
inline std::vector<std::vector<double>> parse_csv_rows(std::string_view text) {
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        std::vector<double> row;
        while (true) {
            const auto comma = line.find(',');
            try {
                row.push_back(parse_double(line.substr(0, comma)));
            } catch (const ValidationError& e) {
                throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
            }
            if (comma == std::string_view::npos) break;
            line.remove_prefix(comma + 1);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading '" + path + "'");
    return data;
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline SignalMatrix matrix_from_csv(std::string_view text) {
    const auto rows = parse_csv_rows(text);
    detail::require(!rows.empty(), "matrix CSV is empty");
    const std::size_t d = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * d);
    for (const auto& r : rows) {
        detail::require(r.size() == d, "matrix CSV rows differ in length");
        values.insert(values.end(), r.begin(), r.end());
    }
    return SignalMatrix(rows.size(), d, std::move(values));
}

inline std::string matrix_to_csv(const SignalMatrix& Y) {
    std::string out;
    for (std::size_t i = 0; i < Y.rows(); ++i) {
        for (std::size_t j = 0; j < Y.cols(); ++j) {
            if (j) out += ',';
            out += format_double(Y(i, j));
        }
        out += '\n';
    }
    return out;
}

inline SignalMatrix read_matrix_csv(const std::string& path) { return matrix_from_csv(read_file(path)); }

inline void write_matrix_csv(const std::string& path, const SignalMatrix& Y) { write_file(path, matrix_to_csv(Y)); }

} // namespace smoothcp
