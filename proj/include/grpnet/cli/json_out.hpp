#pragma once
#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <json.hpp>
#include <grpnet/io/csv.hpp>

namespace grpnet {
namespace cli {

namespace detail {

inline void write_json_value(std::ostream& os, const nlohmann::ordered_json& j, int indent, int depth)
{
    const auto pad = [&](int d) { os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' '); };
    switch (j.type()) {
    case nlohmann::ordered_json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            break;
        }
        os << '{';
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first) os << ',';
            first = false;
            pad(depth + 1);
            os << nlohmann::ordered_json(key).dump() << ": ";
            write_json_value(os, value, indent, depth + 1);
        }
        pad(depth);
        os << '}';
        break;
    }
    case nlohmann::ordered_json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            break;
        }
        const bool scalars = std::none_of(j.begin(), j.end(), [](const auto& e) { return e.is_structured(); });
        os << '[';
        for (std::size_t k = 0; k < j.size(); ++k) {
            if (k) os << (scalars ? ", " : ",");
            if (!scalars) pad(depth + 1);
            write_json_value(os, j[k], indent, depth + 1);
        }
        if (!scalars) pad(depth);
        os << ']';
        break;
    }
    case nlohmann::ordered_json::value_t::number_float: {
        const double v = j.get<double>();
        if (std::isfinite(v)) os << io::format_number(v);
        else os << "null";
        break;
    }
    default:
        os << j.dump();
    }
}

} // namespace detail

/// Indented JSON with floating point numbers written to 17 significant digits.
inline void write_json(std::ostream& os, const nlohmann::ordered_json& j, int indent = 2)
{
    detail::write_json_value(os, j, indent, 0);
    os << '\n';
}

inline std::string json_string(const nlohmann::ordered_json& j, int indent = 2)
{
    std::ostringstream os;
    write_json(os, j, indent);
    return os.str();
}

} // namespace cli
} // namespace grpnet
