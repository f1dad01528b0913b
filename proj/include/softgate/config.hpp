#ifndef SOFTGATE_CONFIG_HPP
#define SOFTGATE_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "softgate/toysim.hpp"

namespace softgate {

/// Config rejected; `keys` lists every offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::vector<std::string> keys)
        : std::runtime_error(what), keys_(std::move(keys)) {}
    [[nodiscard]] const std::vector<std::string>& keys() const noexcept { return keys_; }

private:
    std::vector<std::string> keys_;
};

namespace detail {

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

inline std::string_view trim_config(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Reads `key = value` lines; `#` starts a comment. Keys are the TrainConfig
/// field names. Missing keys keep their defaults.
[[nodiscard]] inline TrainConfig parse_config(std::istream& in) {
    TrainConfig cfg;
    std::vector<std::string> bad;
    std::vector<std::string> problems;
    std::map<std::string, int> seen;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = detail::trim_config(view);
        if (view.empty()) continue;

        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            bad.push_back("line " + std::to_string(lineno));
            problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key(detail::trim_config(view.substr(0, eq)));
        const std::string_view value = detail::trim_config(view.substr(eq + 1));
        if (++seen[key] > 1) {
            bad.push_back(key);
            problems.push_back(key + ": duplicate key");
            continue;
        }

        bool ok = true;
        if (key == "gate") {
            const auto kind = parse_gate_kind(value);
            ok = kind.has_value();
            if (ok) cfg.gate = *kind;
        } else if (key == "task") {
            const auto kind = parse_task_kind(value);
            ok = kind.has_value();
            if (ok) cfg.task = *kind;
        } else if (key == "group_size") {
            ok = detail::parse_number(value, cfg.group_size);
        } else if (key == "updates_per_batch") {
            ok = detail::parse_number(value, cfg.updates_per_batch);
        } else if (key == "queries_per_batch") {
            ok = detail::parse_number(value, cfg.queries_per_batch);
        } else if (key == "max_len") {
            ok = detail::parse_number(value, cfg.max_len);
        } else if (key == "steps") {
            ok = detail::parse_number(value, cfg.steps);
        } else if (key == "seed") {
            ok = detail::parse_number(value, cfg.seed);
        } else if (key == "learning_rate") {
            ok = detail::parse_number(value, cfg.learning_rate);
        } else if (key == "tau_pos") {
            ok = detail::parse_number(value, cfg.tau_pos);
        } else if (key == "tau_neg") {
            ok = detail::parse_number(value, cfg.tau_neg);
        } else if (key == "epsilon") {
            double eps = 0.0;
            ok = detail::parse_number(value, eps);
            if (ok) cfg.epsilon = eps;
        } else {
            bad.push_back(key);
            problems.push_back(key + ": unknown key");
            continue;
        }
        if (!ok) {
            bad.push_back(key);
            problems.push_back(key + ": invalid value '" + std::string(value) + "'");
        }
    }

    auto join = [](const std::vector<std::string>& parts) {
        std::string out;
        for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
        return out;
    };
    if (!bad.empty()) throw ConfigError("invalid config: " + join(problems), bad);

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        throw ConfigError("invalid config: " + msg, {msg.substr(0, msg.find(' '))});
    }
    return cfg;
}

[[nodiscard]] inline TrainConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(in);
}

/// Inverse of parse_config.
[[nodiscard]] inline std::string format_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "gate = " << to_string(cfg.gate) << '\n'
        << "group_size = " << cfg.group_size << '\n'
        << "updates_per_batch = " << cfg.updates_per_batch << '\n'
        << "queries_per_batch = " << cfg.queries_per_batch << '\n'
        << "max_len = " << cfg.max_len << '\n'
        << "learning_rate = " << cfg.learning_rate << '\n'
        << "steps = " << cfg.steps << '\n'
        << "seed = " << cfg.seed << '\n'
        << "tau_pos = " << cfg.tau_pos << '\n'
        << "tau_neg = " << cfg.tau_neg << '\n';
    if (cfg.epsilon) out << "epsilon = " << *cfg.epsilon << '\n';
    out << "task = " << to_string(cfg.task) << '\n';
    return out.str();
}

}  // namespace softgate

#endif  // SOFTGATE_CONFIG_HPP
