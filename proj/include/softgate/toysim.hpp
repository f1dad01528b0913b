#ifndef SOFTGATE_TOYSIM_HPP
#define SOFTGATE_TOYSIM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "softgate/advantage.hpp"
#include "softgate/gates.hpp"
#include "softgate/objective.hpp"
#include "softgate/reward.hpp"
#include "softgate/rng.hpp"

namespace softgate {

enum class TaskKind {
    /// Each query has a fixed answer token; reward is the two-part format/answer reward.
    Target,
    /// Reward drawn uniformly from [0, 2] independently of the response.
    RandomReward,
};

[[nodiscard]] constexpr std::string_view to_string(TaskKind kind) noexcept {
    return kind == TaskKind::Target ? "target" : "random_reward";
}

[[nodiscard]] inline std::optional<TaskKind> parse_task_kind(std::string_view name) noexcept {
    if (name == "target") return TaskKind::Target;
    if (name == "random_reward" || name == "random-reward") return TaskKind::RandomReward;
    return std::nullopt;
}

struct TrainConfig {
    GateKind gate = GateKind::Sigmoid;
    int group_size = 8;
    int updates_per_batch = 2;
    int queries_per_batch = 16;
    int max_len = 16;
    double learning_rate = 200.0;
    int steps = 200;
    std::uint64_t seed = 0;
    double tau_pos = 1.0;
    double tau_neg = 1.0;
    /// Required for hard_clip, ignored otherwise.
    std::optional<double> epsilon;
    TaskKind task = TaskKind::Target;

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const {
        if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
        if (updates_per_batch < 1) throw std::invalid_argument("updates_per_batch must be >= 1");
        if (queries_per_batch < 1) throw std::invalid_argument("queries_per_batch must be >= 1");
        if (max_len < 6) throw std::invalid_argument("max_len must be >= 6");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be positive");
        if (steps < 0) throw std::invalid_argument("steps must be >= 0");
        if (!(tau_pos > 0.0) || !(tau_neg > 0.0)) throw std::invalid_argument("tau_pos and tau_neg must be positive");
        if (epsilon && !(*epsilon > 0.0 && *epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
        if (gate == GateKind::HardClip && !epsilon) throw std::invalid_argument("epsilon is required when gate = hard_clip");
    }

    [[nodiscard]] GateSpec gate_spec() const {
        if (gate == GateKind::HardClip) {
            if (!epsilon) throw std::invalid_argument("gate hard_clip requires epsilon");
            return GateSpec::hard_clip(*epsilon);
        }
        return GateSpec::smooth(gate, Temperature{tau_pos, tau_neg});
    }
};

/// Softmax policy over the toy vocabulary with one logit row per
/// (query, previous token). The first token of a response reads a dedicated
/// begin-of-sequence row, so position enters only through the start.
class TabularPolicy {
public:
    TabularPolicy(std::size_t num_queries, std::size_t max_len, Vocabulary vocab)
        : num_queries_(num_queries), max_len_(max_len), vocab_(vocab),
          logits_(num_queries * (static_cast<std::size_t>(vocab.size()) + 1) * static_cast<std::size_t>(vocab.size()),
                  0.0) {}

    [[nodiscard]] std::size_t num_queries() const noexcept { return num_queries_; }
    [[nodiscard]] std::size_t max_len() const noexcept { return max_len_; }
    [[nodiscard]] const Vocabulary& vocab() const noexcept { return vocab_; }
    [[nodiscard]] std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(vocab_.size()); }
    [[nodiscard]] std::size_t num_contexts() const noexcept { return logits_.size() / vocab_size(); }

    /// Row used to emit the token at `position`; previous < 0 means begin-of-sequence
    /// and is only valid at position 0.
    [[nodiscard]] std::size_t context(std::size_t query, std::size_t position, TokenId previous) const {
        if (query >= num_queries_ || position >= max_len_) throw std::out_of_range("TabularPolicy::context");
        if ((position == 0) != (previous < 0)) {
            throw std::invalid_argument("TabularPolicy::context: begin-of-sequence only at position 0");
        }
        const std::size_t slots = vocab_size() + 1;
        const std::size_t prev = previous < 0 ? vocab_size() : static_cast<std::size_t>(previous);
        if (prev >= slots) throw std::out_of_range("TabularPolicy::context: previous token");
        return query * slots + prev;
    }

    [[nodiscard]] std::span<double> row(std::size_t ctx) { return {logits_.data() + ctx * vocab_size(), vocab_size()}; }
    [[nodiscard]] std::span<const double> row(std::size_t ctx) const {
        return {logits_.data() + ctx * vocab_size(), vocab_size()};
    }

    [[nodiscard]] std::vector<double>& logits() noexcept { return logits_; }
    [[nodiscard]] const std::vector<double>& logits() const noexcept { return logits_; }

    [[nodiscard]] std::vector<double> probabilities(std::size_t ctx) const {
        const auto r = row(ctx);
        const double hi = *std::max_element(r.begin(), r.end());
        std::vector<double> p(r.size());
        double z = 0.0;
        for (std::size_t v = 0; v < r.size(); ++v) z += (p[v] = std::exp(r[v] - hi));
        for (double& x : p) x /= z;
        return p;
    }

    [[nodiscard]] double log_prob(std::size_t ctx, TokenId token) const {
        const auto r = row(ctx);
        const double hi = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (double l : r) z += std::exp(l - hi);
        return r[static_cast<std::size_t>(token)] - hi - std::log(z);
    }

    [[nodiscard]] bool finite() const noexcept {
        return std::all_of(logits_.begin(), logits_.end(), [](double x) { return std::isfinite(x); });
    }

private:
    std::size_t num_queries_;
    std::size_t max_len_;
    Vocabulary vocab_;
    std::vector<double> logits_;
};

/// Mean Shannon entropy (nats) of the softmax rows at the given contexts.
[[nodiscard]] inline double policy_entropy(const TabularPolicy& policy, std::span<const std::size_t> contexts) {
    if (contexts.empty()) throw std::invalid_argument("policy_entropy: empty context set");
    double total = 0.0;
    for (std::size_t ctx : contexts) {
        double h = 0.0;
        for (double p : policy.probabilities(ctx)) {
            if (p > 0.0) h -= p * std::log(p);
        }
        total += h;
    }
    return total / static_cast<double>(contexts.size());
}

/// The toy task: which answer each query expects, and how responses are scored.
struct ToyTask {
    Vocabulary vocab;
    std::size_t num_queries = 4;
    TaskKind kind = TaskKind::Target;

    /// Content index of the expected answer for a query.
    [[nodiscard]] TokenId answer_index(std::size_t query) const noexcept {
        return static_cast<TokenId>((3 * query + 5) % static_cast<std::size_t>(vocab.content_tokens));
    }

    [[nodiscard]] std::string ground_truth(std::size_t query) const { return std::to_string(answer_index(query)); }

    [[nodiscard]] double reward(std::size_t query, std::span<const TokenId> tokens, const StepRng& rng,
                                std::size_t rollout) const {
        if (kind == TaskKind::RandomReward) {
            // position slot past any real token keeps this draw separate from sampling
            return 2.0 * rng.uniform(query, rollout, std::numeric_limits<std::uint32_t>::max());
        }
        return total_reward(MarkedResponse::from_tokens(tokens, vocab), ground_truth(query));
    }
};

/// One sampled response with the behaviour-policy quantities needed for
/// the update: the context of every token and its snapshot log-prob.
struct Trace {
    std::vector<std::size_t> contexts;
    std::vector<double> logprob_old;
};

struct SampledGroup {
    RolloutGroup group;
    std::vector<Trace> traces;
};

/// Draws G responses for one query from the snapshot policy. A response ends
/// at </answer> or after max_len tokens.
[[nodiscard]] inline SampledGroup sample_group(const TabularPolicy& snapshot, std::size_t query_id, int group_size,
                                               int max_len, const StepRng& rng) {
    if (group_size < 2) throw std::invalid_argument("sample_group: group size must be >= 2");
    if (max_len < 1 || static_cast<std::size_t>(max_len) > snapshot.max_len()) {
        throw std::invalid_argument("sample_group: max_len out of range for policy");
    }
    const auto stop = Vocabulary::marker_id(Marker::AnswerClose);

    SampledGroup out;
    out.group.query_id = query_id;
    for (int i = 0; i < group_size; ++i) {
        std::vector<TokenId> tokens;
        Trace trace;
        TokenId prev = -1;
        for (int pos = 0; pos < max_len; ++pos) {
            const std::size_t ctx = snapshot.context(query_id, static_cast<std::size_t>(pos), prev);
            const auto probs = snapshot.probabilities(ctx);
            const double u = rng.uniform(query_id, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(pos));
            TokenId token = static_cast<TokenId>(probs.size() - 1);
            double cum = 0.0;
            for (std::size_t v = 0; v < probs.size(); ++v) {
                cum += probs[v];
                if (u < cum) {
                    token = static_cast<TokenId>(v);
                    break;
                }
            }
            tokens.push_back(token);
            trace.contexts.push_back(ctx);
            trace.logprob_old.push_back(snapshot.log_prob(ctx, token));
            prev = token;
            if (token == stop) break;
        }
        out.group.responses.push_back(std::move(tokens));
        out.traces.push_back(std::move(trace));
    }
    return out;
}

/// Rollouts for one batch, scored and normalized, frozen for the updates.
struct Batch {
    std::vector<SampledGroup> groups;
};

[[nodiscard]] inline Batch sample_batch(const TabularPolicy& snapshot, const TrainConfig& config, const ToyTask& task,
                                        const StepRng& rng) {
    Batch batch;
    for (std::size_t q = 0; q < static_cast<std::size_t>(config.queries_per_batch); ++q) {
        auto sg = sample_group(snapshot, q, config.group_size, config.max_len, rng);
        sg.group.rewards.clear();
        for (std::size_t i = 0; i < sg.group.responses.size(); ++i) {
            sg.group.rewards.push_back(task.reward(q, sg.group.responses[i], rng, i));
        }
        sg.group.normalize();
        batch.groups.push_back(std::move(sg));
    }
    return batch;
}

/// Token steps of the batch under the current policy.
[[nodiscard]] inline std::vector<GroupSteps> token_steps(const TabularPolicy& policy, const Batch& batch) {
    std::vector<GroupSteps> steps;
    steps.reserve(batch.groups.size());
    for (const auto& sg : batch.groups) {
        GroupSteps group;
        for (std::size_t i = 0; i < sg.group.responses.size(); ++i) {
            ResponseSteps response;
            const auto& tokens = sg.group.responses[i];
            const auto& trace = sg.traces[i];
            for (std::size_t t = 0; t < tokens.size(); ++t) {
                response.push_back(TokenStep::from_logprobs(policy.log_prob(trace.contexts[t], tokens[t]),
                                                            trace.logprob_old[t], sg.group.advantages[i]));
            }
            group.push_back(std::move(response));
        }
        steps.push_back(std::move(group));
    }
    return steps;
}

/// Surrogate objective of the frozen batch at the current policy.
[[nodiscard]] inline ObjectiveValue batch_surrogate(const TabularPolicy& policy, const Batch& batch, const GateSpec& spec) {
    const auto steps = token_steps(policy, batch);
    return batch_objective(std::span<const GroupSteps>(steps), spec);
}

struct GradientPass {
    /// d(batch surrogate)/d(logits), same layout as TabularPolicy::logits().
    std::vector<double> gradient;
    /// Per-token ratios and weights in (group, response, token) order.
    std::vector<double> ratios;
    std::vector<double> weights;
};

/// Closed-form gradient of the batch surrogate for the tabular softmax:
/// each token adds weight·r·A·(onehot(token) - softmax(row)) to its row,
/// scaled by 1/(queries·G·|o_i|).
[[nodiscard]] inline GradientPass surrogate_gradient(const TabularPolicy& policy, const Batch& batch,
                                                     const GateSpec& spec) {
    GradientPass pass;
    pass.gradient.assign(policy.logits().size(), 0.0);
    const std::size_t vocab = policy.vocab_size();
    const auto num_groups = static_cast<double>(batch.groups.size());
    for (const auto& sg : batch.groups) {
        const auto group_size = static_cast<double>(sg.group.responses.size());
        for (std::size_t i = 0; i < sg.group.responses.size(); ++i) {
            const auto& tokens = sg.group.responses[i];
            const auto& trace = sg.traces[i];
            const double scale = 1.0 / (num_groups * group_size * static_cast<double>(tokens.size()));
            for (std::size_t t = 0; t < tokens.size(); ++t) {
                const std::size_t ctx = trace.contexts[t];
                const auto step = TokenStep::from_logprobs(policy.log_prob(ctx, tokens[t]), trace.logprob_old[t],
                                                           sg.group.advantages[i]);
                const double weight = token_weight(spec, step);
                pass.ratios.push_back(step.ratio);
                pass.weights.push_back(weight);
                const double coef = weight * step.ratio * step.advantage * scale;
                if (coef == 0.0) continue;
                const auto probs = policy.probabilities(ctx);
                double* g = pass.gradient.data() + ctx * vocab;
                for (std::size_t v = 0; v < vocab; ++v) g[v] -= coef * probs[v];
                g[static_cast<std::size_t>(tokens[t])] += coef;
            }
        }
    }
    return pass;
}

struct StepMetrics {
    int step = 0;
    double mean_reward = 0.0;
    double policy_entropy = 0.0;
    double ratio_mean = 1.0;
    double ratio_var = 0.0;
    double ratio_max_dev = 0.0;
    double suppression_rate = 0.0;
    double degenerate_group_rate = 0.0;

    bool operator==(const StepMetrics&) const = default;
};

/// Threshold below which a token's weight counts as suppressed.
inline constexpr double kSuppressionThreshold = 0.1;

[[nodiscard]] inline double suppression_rate(std::span<const double> weights) {
    if (weights.empty()) return 0.0;
    const auto n = std::count_if(weights.begin(), weights.end(), [](double w) { return w < kSuppressionThreshold; });
    return static_cast<double>(n) / static_cast<double>(weights.size());
}

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int step, const std::string& what)
        : std::runtime_error("divergence at step " + std::to_string(step) + ": " + what), step_(step) {}
    [[nodiscard]] int step() const noexcept { return step_; }

private:
    int step_;
};

[[nodiscard]] inline ToyTask make_task(const TrainConfig& config) {
    return ToyTask{Vocabulary{}, static_cast<std::size_t>(config.queries_per_batch), config.task};
}

[[nodiscard]] inline TabularPolicy make_policy(const TrainConfig& config) {
    return TabularPolicy(static_cast<std::size_t>(config.queries_per_batch), static_cast<std::size_t>(config.max_len),
                         Vocabulary{});
}

/// Snapshot, sample, score, then apply `updates_per_batch` ascent steps on
/// the same batch. Ratio and suppression metrics describe the tokens of the
/// last update; entropy is measured after it.
inline StepMetrics train_step(TabularPolicy& policy, const TrainConfig& config, const ToyTask& task, int step_index) {
    const GateSpec spec = config.gate_spec();
    if (!policy.finite()) throw DivergenceError(step_index, "non-finite logit before update");
    const TabularPolicy snapshot = policy;
    const StepRng rng(CounterRng(config.seed), static_cast<std::uint64_t>(step_index));
    const Batch batch = sample_batch(snapshot, config, task, rng);

    GradientPass pass;
    for (int u = 0; u < config.updates_per_batch; ++u) {
        pass = surrogate_gradient(policy, batch, spec);
        auto& logits = policy.logits();
        for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += config.learning_rate * pass.gradient[k];
        if (!policy.finite()) throw DivergenceError(step_index, "non-finite logit after update " + std::to_string(u + 1));
    }

    StepMetrics m;
    m.step = step_index;

    double reward_sum = 0.0;
    std::size_t responses = 0;
    std::size_t degenerate = 0;
    std::vector<std::size_t> visited;
    for (const auto& sg : batch.groups) {
        for (double r : sg.group.rewards) reward_sum += r;
        responses += sg.group.rewards.size();
        degenerate += sg.group.degenerate ? 1 : 0;
        for (const auto& trace : sg.traces) visited.insert(visited.end(), trace.contexts.begin(), trace.contexts.end());
    }
    std::sort(visited.begin(), visited.end());
    visited.erase(std::unique(visited.begin(), visited.end()), visited.end());

    m.mean_reward = reward_sum / static_cast<double>(responses);
    m.degenerate_group_rate = static_cast<double>(degenerate) / static_cast<double>(batch.groups.size());
    m.policy_entropy = policy_entropy(policy, visited);

    const auto n = static_cast<double>(pass.ratios.size());
    double mean = 0.0;
    for (double r : pass.ratios) mean += r;
    mean /= n;
    double var = 0.0;
    double dev = 0.0;
    for (double r : pass.ratios) {
        var += (r - mean) * (r - mean);
        dev = std::max(dev, std::abs(r - 1.0));
    }
    m.ratio_mean = mean;
    m.ratio_var = var / n;
    m.ratio_max_dev = dev;
    m.suppression_rate = suppression_rate(pass.weights);
    return m;
}

using StepCallback = std::function<void(const StepMetrics&)>;

/// Runs config.steps train steps from a uniform policy. Throws
/// DivergenceError with the failing step index; metrics of the completed
/// steps have already been passed to `on_step`.
inline std::vector<StepMetrics> run_training(const TrainConfig& config, const StepCallback& on_step = {}) {
    config.validate();
    TabularPolicy policy = make_policy(config);
    const ToyTask task = make_task(config);
    std::vector<StepMetrics> out;
    out.reserve(static_cast<std::size_t>(config.steps));
    for (int s = 0; s < config.steps; ++s) {
        out.push_back(train_step(policy, config, task, s));
        if (on_step) on_step(out.back());
    }
    return out;
}

}  // namespace softgate

#endif  // SOFTGATE_TOYSIM_HPP
