#include <catch_amalgamated.hpp>

#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "reward_corpus.hpp"
#include "softgate/reward.hpp"

using namespace softgate;

namespace {

// Regex formulation of the tiers, independent of the segmenter.
double format_oracle(const std::string& text) {
    static const std::regex full(
        R"(^\s*<think>((?!</?think>|</?answer>)[\s\S])*</think>\s*<answer>((?!</?think>|</?answer>)[\s\S])*</answer>\s*$)");
    static const std::regex begins(R"(^\s*<think>)");
    static const std::regex ends(R"(</answer>\s*$)");
    if (std::regex_search(text, full)) return 1.0;
    const bool b = std::regex_search(text, begins);
    const bool e = std::regex_search(text, ends);
    if (b && e) return 0.5;
    return (b || e) ? 0.25 : 0.0;
}

MarkedResponse text(std::string s) { return MarkedResponse::from_text(std::move(s)); }

}  // namespace

TEST_CASE("format_reward examples", "[reward]") {
    CHECK(format_reward(text("<think> a </think> <answer> b </answer>")) == 1.0);
    CHECK(format_reward(text("<think> a b c </answer>")) == 0.5);
    CHECK(format_reward(text("x <answer> b </answer>")) == 0.25);
    CHECK(format_reward(text("b")) == 0.0);
}

TEST_CASE("answer_reward examples", "[reward]") {
    CHECK(answer_reward(text("<think> t </think> <answer> 42 </answer>"), "42") == 1.0);
    CHECK(answer_reward(text("<answer> 41 </answer>"), "42") == 0.0);
    CHECK(answer_reward(text("no markers here"), "42") == 0.0);
    CHECK(answer_reward(text("</answer> 42 <answer>"), "42") == 0.0);
    CHECK(answer_reward(text("<answer> 1 </answer> <answer> 2 </answer>"), "1") == 1.0);
}

TEST_CASE("total_reward examples", "[reward]") {
    CHECK(total_reward(text("<think> t </think> <answer> 42 </answer>"), "42") == 2.0);
    CHECK(total_reward(text("<think> t </think> <answer> 41 </answer>"), "42") == 1.0);
    CHECK(total_reward(text("<answer> 42 </answer>"), "42") == 1.25);
}

TEST_CASE("labelled corpus", "[reward]") {
    std::set<double> tiers;
    for (const auto& c : testing::kFormatCorpus) {
        INFO('"' << c.text << '"');
        const auto r = text(std::string(c.text));
        CHECK(format_reward(r) == c.format);
        CHECK(format_oracle(std::string(c.text)) == c.format);
        CHECK(answer_reward(r, c.truth) == c.answer);
        tiers.insert(format_reward(r));
    }
    CHECK(tiers == std::set<double>{0.0, 0.25, 0.5, 1.0});
}

TEST_CASE("token rendering and random token strings", "[reward][invariant]") {
    const Vocabulary vocab;
    const std::vector<TokenId> full{0, 4, 5, 1, 2, 9, 3};
    const auto r = MarkedResponse::from_tokens(full, vocab);
    CHECK(r.rendered == "<think> 0 1 </think> <answer> 5 </answer>");
    CHECK(total_reward(r, "5") == 2.0);
    CHECK_THROWS_AS(vocab.render(12), std::out_of_range);

    const std::set<double> total_image{0.0, 0.25, 0.5, 1.0, 1.25, 1.5, 2.0};
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> len(0, 9);
    std::uniform_int_distribution<TokenId> tok(0, vocab.size() - 1);
    std::uniform_int_distribution<int> truth(0, 7);
    for (int i = 0; i < 5000; ++i) {
        std::vector<TokenId> ids(static_cast<std::size_t>(len(rng)));
        for (auto& t : ids) t = tok(rng);
        // bias toward the template so the upper tiers are exercised
        if (i % 3 == 0 && ids.size() >= 4) {
            ids.front() = 0;
            ids.back() = 3;
        }
        const auto resp = MarkedResponse::from_tokens(ids, vocab);
        const double f = format_reward(resp);
        REQUIRE(f == format_oracle(resp.rendered));
        const double t = total_reward(resp, std::to_string(truth(rng)));
        REQUIRE(total_image.count(t) == 1);
    }
}

TEST_CASE("answer comparison ignores surrounding whitespace", "[reward][invariant]") {
    for (const char* pad : {"", " ", "  ", "\t", "\n ", " \r\n"}) {
        const std::string p = pad;
        CHECK(answer_reward(text("<answer>" + p + "42" + p + "</answer>"), "42") == 1.0);
        CHECK(answer_reward(text("<answer>42</answer>"), p + "42" + p) == 1.0);
    }
    CHECK(answer_reward(text("<answer> 4 2 </answer>"), "42") == 0.0);
}
