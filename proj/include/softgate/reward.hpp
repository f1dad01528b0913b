#ifndef SOFTGATE_REWARD_HPP
#define SOFTGATE_REWARD_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "softgate/advantage.hpp"

namespace softgate {

enum class Marker { ThinkOpen, ThinkClose, AnswerOpen, AnswerClose };

inline constexpr std::array<std::string_view, 4> kMarkerText = {"<think>", "</think>", "<answer>", "</answer>"};

[[nodiscard]] constexpr std::string_view marker_text(Marker m) noexcept { return kMarkerText[static_cast<std::size_t>(m)]; }

/// Toy vocabulary: ids 0..3 are the markers in `Marker` order, ids 4.. are
/// content tokens rendered as their content index ("0", "1", ...).
struct Vocabulary {
    static constexpr TokenId kNumMarkers = 4;
    TokenId content_tokens = 8;

    [[nodiscard]] TokenId size() const noexcept { return kNumMarkers + content_tokens; }
    [[nodiscard]] static constexpr TokenId marker_id(Marker m) noexcept { return static_cast<TokenId>(m); }
    [[nodiscard]] static constexpr TokenId content_id(TokenId index) noexcept { return kNumMarkers + index; }
    [[nodiscard]] static constexpr bool is_marker(TokenId id) noexcept { return id >= 0 && id < kNumMarkers; }

    [[nodiscard]] std::string render(TokenId id) const {
        if (id < 0 || id >= size()) throw std::out_of_range("Vocabulary::render: token id out of range");
        if (is_marker(id)) return std::string(kMarkerText[static_cast<std::size_t>(id)]);
        return std::to_string(id - kNumMarkers);
    }
};

/// A response as token ids plus its rendered text (space-joined tokens).
struct MarkedResponse {
    std::vector<TokenId> tokens;
    std::string rendered;

    [[nodiscard]] static MarkedResponse from_text(std::string text) { return MarkedResponse{{}, std::move(text)}; }

    [[nodiscard]] static MarkedResponse from_tokens(std::span<const TokenId> tokens, const Vocabulary& vocab) {
        MarkedResponse out;
        out.tokens.assign(tokens.begin(), tokens.end());
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i > 0) out.rendered += ' ';
            out.rendered += vocab.render(tokens[i]);
        }
        return out;
    }
};

namespace detail {

[[nodiscard]] inline std::string_view trim(std::string_view s) noexcept {
    constexpr std::string_view ws = " \t\n\r\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

/// Marker or non-blank text run.
struct Segment {
    std::optional<Marker> marker;
    std::string_view text;
};

/// Splits text at marker substrings; whitespace-only text between markers is dropped.
[[nodiscard]] inline std::vector<Segment> segment(std::string_view s) {
    std::vector<Segment> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t next = std::string_view::npos;
        std::size_t which = 0;
        for (std::size_t m = 0; m < kMarkerText.size(); ++m) {
            const auto at = s.find(kMarkerText[m], pos);
            if (at < next) {
                next = at;
                which = m;
            }
        }
        const auto text = trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (!text.empty()) out.push_back({std::nullopt, text});
        if (next == std::string_view::npos) break;
        out.push_back({static_cast<Marker>(which), {}});
        pos = next + kMarkerText[which].size();
    }
    return out;
}

[[nodiscard]] inline bool is(const Segment& seg, Marker m) noexcept { return seg.marker && *seg.marker == m; }

}  // namespace detail

/// 1 for the full template "<think> T </think> <answer> A </answer>" with
/// nothing outside it and no extra markers; 0.5 when the response starts
/// with <think> and ends with </answer>; 0.25 when only one of those holds;
/// 0 otherwise.
[[nodiscard]] inline double format_reward(const MarkedResponse& response) {
    using detail::is;
    const auto segs = detail::segment(response.rendered);
    if (segs.empty()) return 0.0;

    const bool begins = is(segs.front(), Marker::ThinkOpen);
    const bool ends = is(segs.back(), Marker::AnswerClose);

    if (begins && ends) {
        // text is allowed only inside think and answer; the markers must be exactly the four in order
        std::vector<detail::Segment> markers;
        bool stray_text = false;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (segs[i].marker) {
                markers.push_back(segs[i]);
                continue;
            }
            const bool inside_think = !markers.empty() && is(markers.back(), Marker::ThinkOpen) && markers.size() == 1;
            const bool inside_answer = markers.size() == 3 && is(markers.back(), Marker::AnswerOpen);
            if (!inside_think && !inside_answer) stray_text = true;
        }
        const bool full = !stray_text && markers.size() == 4 && is(markers[0], Marker::ThinkOpen) &&
                          is(markers[1], Marker::ThinkClose) && is(markers[2], Marker::AnswerOpen) &&
                          is(markers[3], Marker::AnswerClose);
        return full ? 1.0 : 0.5;
    }
    return (begins || ends) ? 0.25 : 0.0;
}

/// Text between the first <answer> and the next </answer>, if both exist.
[[nodiscard]] inline std::optional<std::string_view> extract_answer(std::string_view text) {
    const auto open = text.find(marker_text(Marker::AnswerOpen));
    if (open == std::string_view::npos) return std::nullopt;
    const auto start = open + marker_text(Marker::AnswerOpen).size();
    const auto close = text.find(marker_text(Marker::AnswerClose), start);
    if (close == std::string_view::npos) return std::nullopt;
    return text.substr(start, close - start);
}

/// 1 when the extracted answer equals the ground truth after trimming whitespace.
[[nodiscard]] inline double answer_reward(const MarkedResponse& response, std::string_view ground_truth) {
    const auto span = extract_answer(response.rendered);
    if (!span) return 0.0;
    return detail::trim(*span) == detail::trim(ground_truth) ? 1.0 : 0.0;
}

[[nodiscard]] inline double total_reward(const MarkedResponse& response, std::string_view ground_truth) {
    return answer_reward(response, ground_truth) + format_reward(response);
}

}  // namespace softgate

#endif  // SOFTGATE_REWARD_HPP
