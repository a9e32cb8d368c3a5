#include "metashap/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "metashap/dataset.hpp"
#include "metashap/error.hpp"

namespace metashap {

double round_significant(double v, int digits) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*e", digits - 1, v);
    return std::strtod(buf, nullptr);
}

nlohmann::json round_floats(const nlohmann::json& j, int digits) {
    if (j.is_number_float()) return round_significant(j.get<double>(), digits);
    if (j.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& e : j) out.push_back(round_floats(e, digits));
        return out;
    }
    if (j.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [key, value] : j.items()) out[key] = round_floats(value, digits);
        return out;
    }
    return j;
}

std::string canonical_dump(const nlohmann::json& j) { return round_floats(j).dump(2) + "\n"; }

std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, canonical_dump(j)); }

std::string trace_csv(const std::vector<SeededTrace>& traces, const nlohmann::json& provenance) {
    std::ostringstream out;
    out << "# schema_version=metashap-trace/1\n";
    out << "# provenance=" << round_floats(provenance).dump() << '\n';
    out << "seed,iteration,config,observed,best_so_far,mode\n";
    for (const auto& st : traces) {
        for (std::size_t i = 0; i < st.trace->iterations.size(); ++i) {
            const auto& row = st.trace->iterations[i];
            out << st.seed << ',' << i + 1 << ',' << csv_escape(round_floats(config_to_json(row.config)).dump())
                << ',' << format_fixed(row.observed) << ',' << format_fixed(row.best_so_far) << ','
                << st.trace->mode << '\n';
        }
    }
    return out.str();
}

std::string plot_csv(const std::string& param, const RangePlotData& data, const nlohmann::json& provenance) {
    std::ostringstream out;
    out << "# schema_version=metashap-plot/1 param=" << param << '\n';
    out << "# provenance=" << round_floats(provenance).dump() << '\n';
    out << "value,phi,smoothed_phi\n";
    for (std::size_t i = 0; i < data.value.size(); ++i) {
        out << format_fixed(data.value[i]) << ',' << format_fixed(data.phi[i]) << ','
            << format_fixed(data.smoothed_phi[i]) << '\n';
    }
    return out.str();
}

} // namespace metashap
