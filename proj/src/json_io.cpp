#include "cogpipe/json_io.hpp"

#include <cmath>

#include "cogpipe/common.hpp"

namespace cogpipe {

namespace {

void write_value(const nlohmann::json& j, int indent, int depth, std::string& out) {
    const auto newline = [&](int d) {
        if (indent < 0) return;
        out.push_back('\n');
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out.push_back('{');
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                newline(depth + 1);
                out += nlohmann::json(it.key()).dump();
                out += indent < 0 ? ":" : ": ";
                write_value(it.value(), indent, depth + 1, out);
            }
            newline(depth);
            out.push_back('}');
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out.push_back('[');
            bool first = true;
            for (const auto& v : j) {
                if (!first) out.push_back(',');
                first = false;
                newline(depth + 1);
                write_value(v, indent, depth + 1, out);
            }
            newline(depth);
            out.push_back(']');
            return;
        }
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            std::string s = format_double(v);
            // Keep a marker of floatness so integral doubles read back as floats.
            if (s.find_first_of(".eE") == std::string::npos) s += ".0";
            out += s;
            return;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string dump_json(const nlohmann::json& doc, int indent) {
    std::string out;
    write_value(doc, indent, 0, out);
    out.push_back('\n');
    return out;
}

}  // namespace cogpipe
