#ifndef SOFTGATE_OBJECTIVE_HPP
#define SOFTGATE_OBJECTIVE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "softgate/advantage.hpp"
#include "softgate/gates.hpp"

namespace softgate {

/// One sampled token: importance ratio π_θ/π_old, optional log-probs, and the
/// advantage of the response it belongs to.
struct TokenStep {
    double ratio = 1.0;
    std::optional<double> logprob_new;
    std::optional<double> logprob_old;
    double advantage = 0.0;

    [[nodiscard]] static TokenStep from_logprobs(double logprob_new, double logprob_old, double advantage) {
        return TokenStep{std::exp(logprob_new - logprob_old), logprob_new, logprob_old, advantage};
    }

    [[nodiscard]] static TokenStep from_ratio(double ratio, double advantage) {
        return TokenStep{ratio, std::nullopt, std::nullopt, advantage};
    }

    /// Ratio agrees with the log-probs (when both are present) and is nonnegative.
    [[nodiscard]] bool consistent() const noexcept {
        if (!(ratio >= 0.0)) return false;
        if (logprob_new && logprob_old) return std::abs(ratio - std::exp(*logprob_new - *logprob_old)) < 1e-9;
        return true;
    }
};

using ResponseSteps = std::vector<TokenStep>;
using GroupSteps = std::vector<ResponseSteps>;

struct ObjectiveValue {
    double value = 0.0;
    /// w for smooth gates, the unclipped-branch indicator for hard clip.
    /// Flattened in (group, response, token) order.
    std::vector<double> per_token_weights;
};

/// min(r·A, clip(r, 1-ε, 1+ε)·A)
[[nodiscard]] inline double grpo_token_surrogate(double ratio, double advantage, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("grpo_token_surrogate: epsilon must lie in (0, 1)");
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

/// 1 when the min above picks the unclipped branch with a nonzero slope,
/// 0 otherwise. At the kink the clipped branch wins.
[[nodiscard]] inline double hard_clip_weight(double ratio, double advantage, double epsilon) noexcept {
    if (advantage > 0.0) return ratio < 1.0 + epsilon ? 1.0 : 0.0;
    if (advantage < 0.0) return ratio > 1.0 - epsilon ? 1.0 : 0.0;
    return (ratio > 1.0 - epsilon && ratio < 1.0 + epsilon) ? 1.0 : 0.0;
}

/// f(r)·A with the temperature chosen by the sign of A.
[[nodiscard]] inline double sapo_token_surrogate(const GateSpec& spec, double ratio, double advantage) {
    if (!spec.smooth()) throw std::invalid_argument("sapo_token_surrogate: hard_clip spec");
    return gate_value(spec.kind(), spec.temperature().select(advantage), ratio) * advantage;
}

/// w in the per-token gradient coefficient w·r·A.
[[nodiscard]] inline double gradient_weight(const GateSpec& spec, const TokenStep& step) {
    if (!spec.smooth()) {
        throw std::invalid_argument("gradient_weight: hard_clip has no gate weight (see hard_clip_weight)");
    }
    return gate_weight_for_token(spec, step.ratio, step.advantage);
}

/// Per-token surrogate for any spec, smooth or clipped.
[[nodiscard]] inline double token_surrogate(const GateSpec& spec, const TokenStep& step) {
    if (spec.smooth()) return sapo_token_surrogate(spec, step.ratio, step.advantage);
    return grpo_token_surrogate(step.ratio, step.advantage, *spec.clip_epsilon());
}

/// Weight applied to this token: gate derivative or clip indicator.
[[nodiscard]] inline double token_weight(const GateSpec& spec, const TokenStep& step) {
    if (spec.smooth()) return gradient_weight(spec, step);
    return hard_clip_weight(step.ratio, step.advantage, *spec.clip_epsilon());
}

/// d(surrogate)/d(log π_θ) for this token, i.e. weight·r·A.
[[nodiscard]] inline double token_gradient_coefficient(const GateSpec& spec, const TokenStep& step) {
    return token_weight(spec, step) * step.ratio * step.advantage;
}

/// Mean over groups of the mean over responses of the mean over tokens of
/// the per-token surrogate. Groups are reduced sequentially so results are
/// bit-stable.
[[nodiscard]] inline ObjectiveValue batch_objective(std::span<const GroupSteps> steps, const GateSpec& spec) {
    if (steps.empty()) throw std::invalid_argument("batch_objective: empty group list");

    ObjectiveValue out;
    double total = 0.0;
    for (const GroupSteps& group : steps) {
        if (group.empty()) throw std::invalid_argument("batch_objective: group without responses");
        double group_sum = 0.0;
        for (const ResponseSteps& response : group) {
            if (response.empty()) throw std::invalid_argument("batch_objective: empty response");
            double response_sum = 0.0;
            for (const TokenStep& step : response) {
                if (!step.consistent()) throw std::invalid_argument("batch_objective: inconsistent token step");
                response_sum += token_surrogate(spec, step);
                out.per_token_weights.push_back(token_weight(spec, step));
            }
            group_sum += response_sum / static_cast<double>(response.size());
        }
        total += group_sum / static_cast<double>(group.size());
    }
    out.value = total / static_cast<double>(steps.size());
    return out;
}

/// Same as above, validating that the token steps have the shape of `groups`.
[[nodiscard]] inline ObjectiveValue batch_objective(std::span<const RolloutGroup> groups,
                                                    std::span<const GroupSteps> steps, const GateSpec& spec) {
    if (groups.size() != steps.size()) throw std::invalid_argument("batch_objective: group count mismatch");
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].responses.size() != steps[g].size()) {
            throw std::invalid_argument("batch_objective: response count mismatch");
        }
        for (std::size_t i = 0; i < steps[g].size(); ++i) {
            if (groups[g].responses[i].size() != steps[g][i].size()) {
                throw std::invalid_argument("batch_objective: token count mismatch");
            }
        }
    }
    return batch_objective(steps, spec);
}

}  // namespace softgate

#endif  // SOFTGATE_OBJECTIVE_HPP
