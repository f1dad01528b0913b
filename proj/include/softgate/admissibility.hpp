#ifndef SOFTGATE_ADMISSIBILITY_HPP
#define SOFTGATE_ADMISSIBILITY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "softgate/gates.hpp"

namespace softgate {

using ScalarFn = std::function<double(double)>;

enum class DerivativeMode { Analytic, CentralDifference };

struct ProbeGrid {
    double step = 0.01;
    double tail_probe = 1000.0;
    std::size_t points = 0;
    DerivativeMode mode = DerivativeMode::Analytic;
};

/// Verdicts for the four gate properties:
///   (i)   continuously differentiable,
///   (ii)  f' peaks at x = 1 with value 1,
///   (iii) f' decays monotonically away from 1,
///   (iv)  x·f'(x) -> 0 as x -> infinity.
struct AdmissibilityReport {
    bool smooth_ok = false;
    bool peak_ok = false;
    double peak_value = 0.0;
    bool monotone_ok = false;
    double monotone_worst = 0.0;
    bool tail_ok = false;
    double tail_value = 0.0;
    ProbeGrid grid;
    /// Empty unless evaluation hit a non-finite value.
    std::string diagnostic;

    [[nodiscard]] bool all_pass() const noexcept { return smooth_ok && peak_ok && monotone_ok && tail_ok; }
};

struct AdmissibilityOptions {
    double tail_probe = 1000.0;
    double grid_step = 0.01;
};

namespace detail {

inline constexpr double kDiffStep = 1e-6;
inline constexpr double kPeakTolerance = 1e-6;
inline constexpr double kMonotoneSlack = 1e-9;
inline constexpr double kTailCeiling = 0.05;
inline constexpr double kJumpFactor = 10.0;

/// Central difference, switching to second-order one-sided stencils at the
/// ends of [0, upper] so value_fn is never called outside its domain.
[[nodiscard]] inline double numeric_derivative(const ScalarFn& f, double x, double upper) {
    const double h = kDiffStep;
    if (x - h < 0.0) return (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h);
    if (x + h > upper) return (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h);
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace detail

/// Probes a candidate gate on the grid {0, step, 2·step, ..., tail_probe}.
/// Without a derivative_fn, f' comes from central differences of value_fn.
///
/// The limit in (iv) is checked through a finite proxy: x·f'(x) at
/// tail_probe must be below 0.05 and below its value at tail_probe/2
/// (or be exactly zero). Continuity in (i) flags a derivative jump larger
/// than 10× the largest jump two to three grid steps away on either side.
[[nodiscard]] inline AdmissibilityReport check_admissibility(const ScalarFn& value_fn, const ScalarFn& derivative_fn,
                                                             AdmissibilityOptions options = {}) {
    if (!value_fn) throw std::invalid_argument("check_admissibility: value_fn is required");
    if (!(options.tail_probe >= 100.0)) throw std::invalid_argument("check_admissibility: tail_probe must be >= 100");
    if (!(options.grid_step > 0.0 && options.grid_step <= 0.01)) {
        throw std::invalid_argument("check_admissibility: grid_step must lie in (0, 0.01]");
    }

    AdmissibilityReport report;
    const double step = options.grid_step;
    const double upper = options.tail_probe;
    const auto last = static_cast<std::size_t>(std::llround(upper / step));
    report.grid = ProbeGrid{step, upper, last + 1,
                            derivative_fn ? DerivativeMode::Analytic : DerivativeMode::CentralDifference};

    auto deriv = [&](double x) {
        return derivative_fn ? derivative_fn(x) : detail::numeric_derivative(value_fn, x, upper);
    };
    auto grid_x = [&](std::size_t k) { return k == last ? upper : static_cast<double>(k) * step; };

    std::vector<double> d(last + 1);
    for (std::size_t k = 0; k <= last; ++k) {
        const double x = grid_x(k);
        const double v = value_fn(x);
        d[k] = deriv(x);
        if (!std::isfinite(v) || !std::isfinite(d[k])) {
            report.diagnostic = "non-finite gate value or derivative at x = " + std::to_string(x);
            return report;
        }
    }

    // (i)
    const double floor = derivative_fn ? 1e-12 : 1e-6;
    std::vector<double> jump(last);
    for (std::size_t k = 0; k < last; ++k) jump[k] = std::abs(d[k + 1] - d[k]);
    report.smooth_ok = true;
    for (std::size_t k = 0; k < last; ++k) {
        double local = 0.0;
        for (std::ptrdiff_t off : {-3, -2, 2, 3}) {
            const auto j = static_cast<std::ptrdiff_t>(k) + off;
            if (j >= 0 && j < static_cast<std::ptrdiff_t>(last)) local = std::max(local, jump[static_cast<std::size_t>(j)]);
        }
        if (jump[k] > detail::kJumpFactor * local + floor) {
            report.smooth_ok = false;
            break;
        }
    }

    // (ii)
    const auto centre = std::min(last, static_cast<std::size_t>(std::llround(1.0 / step)));
    report.peak_value = deriv(1.0);
    const double grid_max = *std::max_element(d.begin(), d.end());
    report.peak_ok = std::abs(report.peak_value - 1.0) < detail::kPeakTolerance &&
                     grid_max <= d[centre] + detail::kMonotoneSlack;

    // (iii)
    double worst = 0.0;
    for (std::size_t k = 0; k < last; ++k) {
        const double rise = d[k + 1] - d[k];
        if (k + 1 <= centre) worst = std::max(worst, -rise);
        else if (k >= centre) worst = std::max(worst, rise);
    }
    report.monotone_worst = worst;
    report.monotone_ok = worst <= detail::kMonotoneSlack;

    // (iv)
    const double half = 0.5 * upper;
    const double half_value = half * deriv(half);
    report.tail_value = upper * d[last];
    report.tail_ok = report.tail_value < detail::kTailCeiling &&
                     (report.tail_value < half_value || report.tail_value == 0.0);
    return report;
}

[[nodiscard]] inline AdmissibilityReport check_admissibility(const ScalarFn& value_fn, AdmissibilityOptions options = {}) {
    return check_admissibility(value_fn, ScalarFn{}, options);
}

/// Convenience overload for the built-in smooth gates.
[[nodiscard]] inline AdmissibilityReport check_gate_admissibility(GateKind kind, double tau,
                                                                  AdmissibilityOptions options = {}) {
    if (!is_smooth(kind)) throw std::invalid_argument("check_gate_admissibility: hard_clip is not a smooth gate");
    return check_admissibility([=](double x) { return gate_value(kind, tau, x); },
                               [=](double x) { return gate_derivative(kind, tau, x); }, options);
}

}  // namespace softgate

#endif  // SOFTGATE_ADMISSIBILITY_HPP
