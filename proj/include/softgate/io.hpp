#ifndef SOFTGATE_IO_HPP
#define SOFTGATE_IO_HPP

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "softgate/admissibility.hpp"
#include "softgate/toysim.hpp"

namespace softgate {

/// Shortest decimal string that parses back to the same double.
[[nodiscard]] inline std::string format_double(double x) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

/// Opens `path` for writing in binary mode (LF line endings on every platform).
[[nodiscard]] inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    return out;
}

inline constexpr std::string_view kMetricsHeader =
    "step,mean_reward,policy_entropy,ratio_mean,ratio_var,ratio_max_dev,suppression_rate,degenerate_group_rate";

inline void write_metrics_row(std::ostream& out, const StepMetrics& m) {
    out << m.step << ',' << format_double(m.mean_reward) << ',' << format_double(m.policy_entropy) << ','
        << format_double(m.ratio_mean) << ',' << format_double(m.ratio_var) << ',' << format_double(m.ratio_max_dev)
        << ',' << format_double(m.suppression_rate) << ',' << format_double(m.degenerate_group_rate) << '\n';
}

inline void write_metrics_csv(std::ostream& out, std::span<const StepMetrics> metrics) {
    out << kMetricsHeader << '\n';
    for (const auto& m : metrics) write_metrics_row(out, m);
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const AdmissibilityReport& r) {
    nlohmann::ordered_json j;
    j["smooth_ok"] = r.smooth_ok;
    j["peak_ok"] = r.peak_ok;
    j["peak_value"] = r.peak_value;
    j["monotone_ok"] = r.monotone_ok;
    j["monotone_worst"] = r.monotone_worst;
    j["tail_ok"] = r.tail_ok;
    j["tail_value"] = r.tail_value;
    j["grid_step"] = r.grid.step;
    j["tail_probe"] = r.grid.tail_probe;
    return j;
}

}  // namespace softgate

#endif  // SOFTGATE_IO_HPP
