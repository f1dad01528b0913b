#ifndef SOFTGATE_CLI_HPP
#define SOFTGATE_CLI_HPP

// Command implementations behind tools/softgate. Each cmd_* returns the
// process exit status: 0 success / all checks pass, 1 check failure or
// divergence, 2 usage or validation error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "softgate/admissibility.hpp"
#include "softgate/config.hpp"
#include "softgate/gates.hpp"
#include "softgate/io.hpp"
#include "softgate/objective.hpp"
#include "softgate/toysim.hpp"

namespace softgate {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

// ---------------------------------------------------------------------------
// curves

struct CurveRequest {
    std::vector<GateKind> gates{kAllGates.begin(), kAllGates.end()};
    std::vector<double> taus{1.0, 5.0, 10.0};
    double x_min = 0.0;
    double x_max = 3.0;
    int points = 301;
    /// Clip width for hard_clip rows.
    double epsilon = 0.2;

    void validate() const {
        if (gates.empty()) throw std::invalid_argument("curves: at least one gate is required");
        if (taus.empty()) throw std::invalid_argument("curves: at least one tau is required");
        for (double t : taus) {
            if (!(t > 0.0)) throw std::invalid_argument("curves: tau must be positive");
        }
        if (!(x_min >= 0.0)) throw std::invalid_argument("curves: x_min must be >= 0");
        if (points < 1) throw std::invalid_argument("curves: points must be >= 1");
        if (points == 1 && x_min != x_max) throw std::invalid_argument("curves: a single point needs x_min == x_max");
        if (points >= 2 && !(x_min < x_max)) throw std::invalid_argument("curves: x_min must be < x_max");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("curves: epsilon must lie in (0, 1)");
    }

    [[nodiscard]] double x_at(int i) const {
        if (points == 1) return x_min;
        return x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
};

struct CurveRow {
    double x;
    GateKind gate;
    double tau;
    double value;
    double derivative;
};

/// Rows ordered by x, then gate, then tau. hard_clip rows carry the
/// positive-advantage clipped surrogate and its piecewise-constant slope.
[[nodiscard]] inline std::vector<CurveRow> curve_rows(const CurveRequest& req) {
    req.validate();
    std::vector<CurveRow> rows;
    rows.reserve(static_cast<std::size_t>(req.points) * req.gates.size() * req.taus.size());
    for (int i = 0; i < req.points; ++i) {
        const double x = req.x_at(i);
        for (GateKind g : req.gates) {
            for (double tau : req.taus) {
                if (g == GateKind::HardClip) {
                    rows.push_back({x, g, tau, grpo_token_surrogate(x, 1.0, req.epsilon),
                                    hard_clip_weight(x, 1.0, req.epsilon)});
                } else {
                    rows.push_back({x, g, tau, gate_value(g, tau, x), gate_derivative(g, tau, x)});
                }
            }
        }
    }
    return rows;
}

inline void write_curves_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
    out << "x,gate,tau,value,derivative\n";
    for (const auto& r : rows) {
        out << format_double(r.x) << ',' << to_string(r.gate) << ',' << format_double(r.tau) << ','
            << format_double(r.value) << ',' << format_double(r.derivative) << '\n';
    }
}

inline int cmd_curves(const CurveRequest& req, const std::filesystem::path& output) {
    const auto rows = curve_rows(req);
    auto out = open_output(output);
    write_curves_csv(out, rows);
    if (!out) throw std::runtime_error("write failed: " + output.string());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// check

/// Hand-written candidates that are not in the gate family, used to show
/// what the checker rejects.
enum class CustomGate { Linear, ClipSurrogate, ShiftedErf, RescaledErf };

[[nodiscard]] inline std::optional<CustomGate> parse_custom_gate(std::string_view name) noexcept {
    if (name == "linear") return CustomGate::Linear;
    if (name == "clip_surrogate" || name == "clip-surrogate") return CustomGate::ClipSurrogate;
    if (name == "shifted_erf" || name == "shifted-erf") return CustomGate::ShiftedErf;
    if (name == "rescaled_erf" || name == "rescaled-erf") return CustomGate::RescaledErf;
    return std::nullopt;
}

struct CandidateGate {
    ScalarFn value;
    ScalarFn derivative;  // empty: checker differentiates numerically
};

/// linear: f(x) = x. clip_surrogate: min(x, clip(x, 1-ε, 1+ε)), value only.
/// shifted_erf: erf gate with its peak moved to x = 1.5. rescaled_erf: erf gate
/// scaled by 1/2 so the derivative peaks at 0.5.
[[nodiscard]] inline CandidateGate make_custom_gate(CustomGate kind, double tau, double epsilon = 0.2) {
    switch (kind) {
        case CustomGate::Linear:
            return {[](double x) { return x; }, [](double) { return 1.0; }};
        case CustomGate::ClipSurrogate:
            return {[=](double x) { return grpo_token_surrogate(x, 1.0, epsilon); }, {}};
        case CustomGate::ShiftedErf:
            return {[=](double x) {
                        const double c = std::sqrt(std::numbers::pi / 2.0) / tau;
                        return c * (1.0 + std::erf(tau * (x - 1.5) / std::numbers::sqrt2)) + 1.0 - c;
                    },
                    [=](double x) { return std::exp(-0.5 * tau * tau * (x - 1.5) * (x - 1.5)); }};
        case CustomGate::RescaledErf:
            return {[=](double x) { return 0.5 * gate_value(GateKind::Erf, tau, x) + 0.5; },
                    [=](double x) { return 0.5 * gate_derivative(GateKind::Erf, tau, x); }};
    }
    throw std::invalid_argument("unknown custom gate");
}

struct CheckRequest {
    std::optional<GateKind> gate;
    std::optional<CustomGate> custom;
    double tau = 1.0;
    AdmissibilityOptions options;
};

[[nodiscard]] inline AdmissibilityReport run_check(const CheckRequest& req) {
    if (req.gate.has_value() == req.custom.has_value()) {
        throw std::invalid_argument("check: give exactly one of a gate or a custom candidate");
    }
    if (!(req.tau > 0.0)) throw std::invalid_argument("check: tau must be positive");
    if (req.gate) return check_gate_admissibility(*req.gate, req.tau, req.options);
    const auto candidate = make_custom_gate(*req.custom, req.tau);
    return check_admissibility(candidate.value, candidate.derivative, req.options);
}

inline int cmd_check(const CheckRequest& req, const std::filesystem::path& output) {
    const auto report = run_check(req);
    auto out = open_output(output);
    out << to_json(report).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + output.string());
    if (!report.diagnostic.empty()) std::cerr << "check: " << report.diagnostic << '\n';
    return report.all_pass() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// train / compare

struct RunSummary {
    int steps_completed = 0;
    std::optional<double> final_mean_reward;
    std::optional<double> final_entropy;
    /// Mean over steps of suppression_rate.
    std::optional<double> mean_suppression;
    bool diverged = false;
    std::optional<int> divergence_step;
};

[[nodiscard]] inline RunSummary summarize(const std::vector<StepMetrics>& metrics, std::optional<int> divergence_step) {
    RunSummary s;
    s.steps_completed = static_cast<int>(metrics.size());
    s.diverged = divergence_step.has_value();
    s.divergence_step = divergence_step;
    if (!metrics.empty()) {
        s.final_mean_reward = metrics.back().mean_reward;
        s.final_entropy = metrics.back().policy_entropy;
        double total = 0.0;
        for (const auto& m : metrics) total += m.suppression_rate;
        s.mean_suppression = total / static_cast<double>(metrics.size());
    }
    return s;
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const RunSummary& s) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    nlohmann::ordered_json j;
    j["final_mean_reward"] = opt(s.final_mean_reward);
    j["final_entropy"] = opt(s.final_entropy);
    j["diverged"] = s.diverged;
    j["steps_completed"] = s.steps_completed;
    j["divergence_step"] = s.divergence_step ? nlohmann::ordered_json(*s.divergence_step) : nlohmann::ordered_json();
    return j;
}

/// Runs training, streaming each step to `on_step`; divergence is reported
/// in the summary instead of thrown.
[[nodiscard]] inline RunSummary run_and_summarize(const TrainConfig& cfg, const StepCallback& on_step = {}) {
    std::vector<StepMetrics> metrics;
    std::optional<int> diverged_at;
    try {
        (void)run_training(cfg, [&](const StepMetrics& m) {
            metrics.push_back(m);
            if (on_step) on_step(m);
        });
    } catch (const DivergenceError& e) {
        diverged_at = e.step();
    }
    return summarize(metrics, diverged_at);
}

[[nodiscard]] inline std::filesystem::path default_summary_path(const std::filesystem::path& metrics_path) {
    auto p = metrics_path;
    p.replace_extension(".summary.json");
    return p;
}

inline int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& output,
                     std::optional<std::filesystem::path> summary_path = std::nullopt) {
    const TrainConfig cfg = load_config(config_path.string());
    auto csv = open_output(output);
    csv << kMetricsHeader << '\n';
    const RunSummary summary = run_and_summarize(cfg, [&](const StepMetrics& m) { write_metrics_row(csv, m); });
    csv.flush();
    if (!csv) throw std::runtime_error("write failed: " + output.string());

    const auto spath = summary_path.value_or(default_summary_path(output));
    auto js = open_output(spath);
    js << to_json(summary).dump(2) << '\n';
    if (!js) throw std::runtime_error("write failed: " + spath.string());
    return summary.diverged ? kExitFailure : kExitOk;
}

struct CompareRow {
    GateKind gate;
    int runs = 0;
    int diverged_runs = 0;
    double final_reward_mean = 0.0;
    double final_reward_std = 0.0;
    double final_entropy_mean = 0.0;
    double final_entropy_std = 0.0;
    double suppression_mean = 0.0;
    double suppression_std = 0.0;
};

namespace detail {

/// Population mean and std.
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {std::nan(""), std::nan("")};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace detail

/// One row per gate (sorted by gate), aggregating `seeds` runs that differ
/// from `base` only in gate and seed.
[[nodiscard]] inline std::vector<CompareRow> run_compare(const TrainConfig& base, std::vector<GateKind> gates,
                                                         const std::vector<std::uint64_t>& seeds) {
    if (gates.empty()) throw std::invalid_argument("compare: at least one gate is required");
    if (seeds.empty()) throw std::invalid_argument("compare: at least one seed is required");
    std::sort(gates.begin(), gates.end());
    gates.erase(std::unique(gates.begin(), gates.end()), gates.end());

    std::vector<CompareRow> rows;
    for (GateKind g : gates) {
        TrainConfig cfg = base;
        cfg.gate = g;
        cfg.validate();
        std::vector<double> reward, entropy, suppression;
        CompareRow row{g};
        for (std::uint64_t seed : seeds) {
            cfg.seed = seed;
            const auto s = run_and_summarize(cfg);
            ++row.runs;
            row.diverged_runs += s.diverged ? 1 : 0;
            if (s.final_mean_reward) reward.push_back(*s.final_mean_reward);
            if (s.final_entropy) entropy.push_back(*s.final_entropy);
            if (s.mean_suppression) suppression.push_back(*s.mean_suppression);
        }
        std::tie(row.final_reward_mean, row.final_reward_std) = detail::mean_std(reward);
        std::tie(row.final_entropy_mean, row.final_entropy_std) = detail::mean_std(entropy);
        std::tie(row.suppression_mean, row.suppression_std) = detail::mean_std(suppression);
        rows.push_back(row);
    }
    return rows;
}

inline void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
    out << "gate,runs,diverged_runs,final_reward_mean,final_reward_std,final_entropy_mean,final_entropy_std,"
           "suppression_mean,suppression_std\n";
    for (const auto& r : rows) {
        out << to_string(r.gate) << ',' << r.runs << ',' << r.diverged_runs << ',' << format_double(r.final_reward_mean)
            << ',' << format_double(r.final_reward_std) << ',' << format_double(r.final_entropy_mean) << ','
            << format_double(r.final_entropy_std) << ',' << format_double(r.suppression_mean) << ','
            << format_double(r.suppression_std) << '\n';
    }
}

/// `epsilon`, when given, overrides the config value (hard_clip needs one).
inline int cmd_compare(const std::filesystem::path& config_path, const std::vector<GateKind>& gates,
                       const std::vector<std::uint64_t>& seeds, const std::filesystem::path& output,
                       std::optional<double> epsilon = std::nullopt) {
    TrainConfig base = load_config(config_path.string());
    if (epsilon) base.epsilon = epsilon;
    std::vector<CompareRow> rows;
    try {
        rows = run_compare(base, gates, seeds);
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        throw ConfigError("invalid config: " + msg, {msg.substr(0, msg.find(' '))});
    }
    auto out = open_output(output);
    write_compare_csv(out, rows);
    if (!out) throw std::runtime_error("write failed: " + output.string());
    const bool any_diverged = std::any_of(rows.begin(), rows.end(), [](const CompareRow& r) { return r.diverged_runs > 0; });
    return any_diverged ? kExitFailure : kExitOk;
}

}  // namespace softgate

#endif  // SOFTGATE_CLI_HPP
