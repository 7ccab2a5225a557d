#include <charconv>
#include <cmath>
#include <json.hpp>
#include <ostream>

#include "weakflow/cli.hpp"

namespace weakflow::cli {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_flow_lines(std::ostream& os, const std::vector<FlowLine>& lines, const std::vector<double>& launch_x,
                      double z0, Format format, double length_unit) {
    auto row = [&](std::size_t id, double z, double x, double weight, LineFlag flag) {
        if (format == Format::csv) {
            os << id << ',' << format_number(z * length_unit) << ',' << format_number(x * length_unit) << ','
               << format_number(weight) << ',' << flag_name(flag) << '\n';
        } else {
            nlohmann::json j;
            j["line_id"] = id;
            j["z"] = z * length_unit;
            j["x"] = x * length_unit;
            j["weight"] = weight;
            j["flag"] = flag_name(flag);
            os << j.dump() << '\n';
        }
    };
    if (format == Format::csv) os << flow_csv_header << '\n';
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const FlowLine& l = lines[i];
        // a line stopped at its launch point still gets one row
        if (l.x.empty()) {
            row(i, z0, launch_x.at(i), l.start_weight, l.flag);
            continue;
        }
        for (std::size_t j = 0; j < l.x.size(); ++j) row(i, l.z[j], l.x[j], l.start_weight, l.flag);
    }
}

}  // namespace weakflow::cli
