#pragma once
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>
#include <grpnet/util/exceptions.hpp>
#include <grpnet/util/types.hpp>

namespace grpnet {
namespace io {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;

struct csv_table
{
    std::vector<std::string> header;    // empty when the file has no header row
    mat_type data;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Parses a finite double occupying the whole field.
inline bool parse_number(std::string_view s, value_t& out)
{
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::string unquote(std::string_view s)
{
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

} // namespace detail

/**
 * Parses a rectangular numeric CSV. The first non-blank row is taken as a
 * header when any of its fields is not a number. Blank lines are skipped.
 * Empty, NA or non-numeric cells raise parse_error with their location.
 */
inline csv_table parse_csv(std::istream& in)
{
    csv_table out;
    std::vector<value_t> values;
    std::size_t ncols = 0, nrows = 0, line_no = 0;
    bool first = true;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(line);
        if (first) {
            first = false;
            ncols = fields.size();
            bool numeric = true;
            value_t tmp;
            for (auto f : fields) numeric = numeric && detail::parse_number(f, tmp);
            if (!numeric) {
                for (auto f : fields) out.header.push_back(detail::unquote(f));
                continue;
            }
        }
        if (fields.size() != ncols) throw util::ragged_rows_error(line_no, ncols, fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            value_t v;
            if (!detail::parse_number(fields[j], v)) {
                throw util::parse_error("non-numeric cell '" + std::string(fields[j]) + "'", line_no, j + 1);
            }
            values.push_back(v);
        }
        ++nrows;
    }
    out.data.resize(static_cast<index_t>(nrows), static_cast<index_t>(ncols));
    for (std::size_t i = 0; i < nrows; ++i)
        for (std::size_t j = 0; j < ncols; ++j) out.data(i, j) = values[i * ncols + j];
    return out;
}

inline csv_table parse_csv(const std::string& text)
{
    std::istringstream in(text);
    return parse_csv(in);
}

inline csv_table load_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw util::invalid_argument_error("cannot open '" + path + "' for reading.");
    return parse_csv(in);
}

/// Shortest-safe round-trip text for a double (17 significant digits).
inline std::string format_number(value_t x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& header, const mat_type& data)
{
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    if (!header.empty()) out << '\n';
    for (index_t i = 0; i < data.rows(); ++i) {
        for (index_t j = 0; j < data.cols(); ++j) out << (j ? "," : "") << format_number(data(i, j));
        out << '\n';
    }
}

inline void save_csv(const std::string& path, const std::vector<std::string>& header, const mat_type& data)
{
    std::ofstream out(path);
    if (!out) throw util::invalid_argument_error("cannot open '" + path + "' for writing.");
    write_csv(out, header, data);
}

} // namespace io
} // namespace grpnet
