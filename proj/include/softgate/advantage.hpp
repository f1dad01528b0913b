#ifndef SOFTGATE_ADVANTAGE_HPP
#define SOFTGATE_ADVANTAGE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace softgate {

using TokenId = std::int32_t;

struct NormalizedAdvantages {
    std::vector<double> values;
    /// All rewards were identical; values are all zero.
    bool degenerate = false;
};

/// (R_i - mean) / std with the population standard deviation. A zero-variance
/// group yields zeros and the degenerate flag instead of an error.
[[nodiscard]] inline NormalizedAdvantages normalize_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) throw std::invalid_argument("normalize_advantages: need at least 2 rewards");

    const auto n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;

    NormalizedAdvantages out;
    out.values.assign(rewards.size(), 0.0);
    const bool all_equal = [&] {
        for (double r : rewards) {
            if (r != rewards.front()) return false;
        }
        return true;
    }();
    if (all_equal || var == 0.0) {
        out.degenerate = true;
        return out;
    }
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < rewards.size(); ++i) out.values[i] = (rewards[i] - mean) / sd;
    return out;
}

/// G responses sampled for one query. Every token of response i carries
/// advantage[i].
struct RolloutGroup {
    std::size_t query_id = 0;
    std::vector<std::vector<TokenId>> responses;
    std::vector<double> rewards;
    std::vector<double> advantages;
    bool degenerate = false;

    [[nodiscard]] std::size_t size() const noexcept { return responses.size(); }

    /// Fills advantages from rewards.
    void normalize() {
        if (responses.size() != rewards.size()) {
            throw std::invalid_argument("RolloutGroup: responses and rewards differ in length");
        }
        auto adv = normalize_advantages(rewards);
        advantages = std::move(adv.values);
        degenerate = adv.degenerate;
    }
};

}  // namespace softgate

#endif  // SOFTGATE_ADVANTAGE_HPP
