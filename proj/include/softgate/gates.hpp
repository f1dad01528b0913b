#ifndef SOFTGATE_GATES_HPP
#define SOFTGATE_GATES_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace softgate {

/// Gate families usable inside the surrogate objective. HardClip is the
/// PPO/GRPO clip and is parameterized by a clip width instead of a temperature.
enum class GateKind { HardClip, Sigmoid, Erf, Arctan, Softsign };

inline constexpr std::array<GateKind, 5> kAllGates = {
    GateKind::HardClip, GateKind::Sigmoid, GateKind::Erf, GateKind::Arctan, GateKind::Softsign};

inline constexpr std::array<GateKind, 4> kSmoothGates = {
    GateKind::Sigmoid, GateKind::Erf, GateKind::Arctan, GateKind::Softsign};

[[nodiscard]] constexpr bool is_smooth(GateKind kind) noexcept { return kind != GateKind::HardClip; }

[[nodiscard]] constexpr std::string_view to_string(GateKind kind) noexcept {
    switch (kind) {
        case GateKind::HardClip: return "hard_clip";
        case GateKind::Sigmoid: return "sigmoid";
        case GateKind::Erf: return "erf";
        case GateKind::Arctan: return "arctan";
        case GateKind::Softsign: return "softsign";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<GateKind> parse_gate_kind(std::string_view name) noexcept {
    for (GateKind kind : kAllGates) {
        if (to_string(kind) == name) return kind;
    }
    // kebab-case alias for the CLI
    if (name == "hard-clip") return GateKind::HardClip;
    return std::nullopt;
}

/// Separate temperatures for positive and non-positive advantages.
struct Temperature {
    double tau_pos = 1.0;
    double tau_neg = 1.0;

    [[nodiscard]] double select(double advantage) const noexcept {
        return advantage > 0.0 ? tau_pos : tau_neg;
    }
};

/// One gate configuration. `clip_epsilon` is set exactly when kind is HardClip.
class GateSpec {
public:
    [[nodiscard]] static GateSpec smooth(GateKind kind, Temperature temperature) {
        if (!is_smooth(kind)) throw std::invalid_argument("GateSpec::smooth: hard_clip needs a clip epsilon");
        if (!(temperature.tau_pos > 0.0) || !(temperature.tau_neg > 0.0)) {
            throw std::invalid_argument("GateSpec: temperatures must be positive");
        }
        return GateSpec(kind, temperature, std::nullopt);
    }

    [[nodiscard]] static GateSpec smooth(GateKind kind, double tau) { return smooth(kind, {tau, tau}); }

    [[nodiscard]] static GateSpec hard_clip(double epsilon) {
        if (!(epsilon > 0.0 && epsilon < 1.0)) {
            throw std::invalid_argument("GateSpec: clip epsilon must lie in (0, 1)");
        }
        return GateSpec(GateKind::HardClip, {}, epsilon);
    }

    [[nodiscard]] GateKind kind() const noexcept { return kind_; }
    [[nodiscard]] const Temperature& temperature() const noexcept { return temperature_; }
    [[nodiscard]] const std::optional<double>& clip_epsilon() const noexcept { return clip_epsilon_; }
    [[nodiscard]] bool smooth() const noexcept { return is_smooth(kind_); }

    bool operator==(const GateSpec&) const = default;

private:
    GateSpec(GateKind kind, Temperature temperature, std::optional<double> epsilon)
        : kind_(kind), temperature_(temperature), clip_epsilon_(epsilon) {}

    GateKind kind_;
    Temperature temperature_;
    std::optional<double> clip_epsilon_;
};

namespace detail {

inline void require_smooth_args(GateKind kind, double tau, double x, const char* what) {
    if (!is_smooth(kind)) {
        throw std::invalid_argument(std::string(what) + ": hard_clip has no single-valued gate");
    }
    if (!(tau > 0.0)) throw std::invalid_argument(std::string(what) + ": tau must be positive");
    if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": ratio must be nonnegative");
}

/// Logistic function without overflow for large |z|.
[[nodiscard]] inline double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace detail

/// f(x) for a smooth gate, including the additive constants that make the
/// erf/arctan/softsign gates pass through (1, 1). The sigmoid gate is
/// σ(τ(x-1))·4/τ and therefore equals 2/τ at x = 1.
[[nodiscard]] inline double gate_value(GateKind kind, double tau, double x) {
    detail::require_smooth_args(kind, tau, x, "gate_value");
    const double d = x - 1.0;
    switch (kind) {
        case GateKind::Sigmoid:
            return detail::logistic(tau * d) * 4.0 / tau;
        case GateKind::Erf: {
            const double c = std::sqrt(std::numbers::pi / (2.0 * tau * tau));
            return 1.0 + c * std::erf(tau * d / std::numbers::sqrt2);
        }
        case GateKind::Arctan:
            return 1.0 + std::atan(tau * d) / tau;
        case GateKind::Softsign:
            return 1.0 + d / std::sqrt(1.0 + tau * tau * d * d);
        case GateKind::HardClip:
            break;
    }
    throw std::invalid_argument("gate_value: unknown gate");
}

/// f'(x). Lies in (0, 1] and equals 1 at x = 1 for every smooth gate.
/// The sigmoid derivative is 4σ(z)(1-σ(z)) with z = τ(x-1).
[[nodiscard]] inline double gate_derivative(GateKind kind, double tau, double x) {
    detail::require_smooth_args(kind, tau, x, "gate_derivative");
    const double d = x - 1.0;
    const double u = tau * tau * d * d;
    switch (kind) {
        case GateKind::Sigmoid: {
            const double z = tau * d;
            // σ(z)(1-σ(z)) = σ(z)σ(-z), both factors stable
            return 4.0 * detail::logistic(z) * detail::logistic(-z);
        }
        case GateKind::Erf:
            return std::exp(-0.5 * u);
        case GateKind::Arctan:
            return 1.0 / (1.0 + u);
        case GateKind::Softsign: {
            const double s = 1.0 + u;
            return 1.0 / (s * std::sqrt(s));
        }
        case GateKind::HardClip:
            break;
    }
    throw std::invalid_argument("gate_derivative: unknown gate");
}

/// Gate derivative with the temperature picked by the advantage sign.
/// A zero advantage takes tau_neg.
[[nodiscard]] inline double gate_weight_for_token(const GateSpec& spec, double ratio, double advantage) {
    if (!spec.smooth()) throw std::invalid_argument("gate_weight_for_token: hard_clip has no gate weight");
    return gate_derivative(spec.kind(), spec.temperature().select(advantage), ratio);
}

}  // namespace softgate

#endif  // SOFTGATE_GATES_HPP
