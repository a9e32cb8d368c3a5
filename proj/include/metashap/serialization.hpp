#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "metashap/insights.hpp"
#include "metashap/optimizer.hpp"

namespace metashap {

inline constexpr int kOutputDigits = 12;

// Rounds to `digits` significant digits.
double round_significant(double v, int digits = kOutputDigits);

// Copy of `j` with every floating-point number rounded.
nlohmann::json round_floats(const nlohmann::json& j, int digits = kOutputDigits);

// Sorted keys, rounded floats, two-space indent, trailing newline.
std::string canonical_dump(const nlohmann::json& j);

std::string format_fixed(double v, int digits = kOutputDigits);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

struct SeededTrace {
    std::uint64_t seed = 0;
    const BOTrace* trace = nullptr;
};

// Comment header with schema and provenance, then
// seed,iteration,config,observed,best_so_far,mode.
std::string trace_csv(const std::vector<SeededTrace>& traces, const nlohmann::json& provenance);

// Comment header, then value,phi,smoothed_phi.
std::string plot_csv(const std::string& param, const RangePlotData& data, const nlohmann::json& provenance);

} // namespace metashap
