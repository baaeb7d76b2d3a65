#include "generators.hpp"
#include "oracles.hpp"
#include "star/error.hpp"
#include "star/similarity.hpp"

#include <doctest.h>

using namespace star;

namespace {

TokenSequence seq(std::vector<std::string> t) { return TokenSequence::from_tokens(std::move(t)); }

std::vector<std::string> random_tokens(testing::Gen& gen, std::size_t max_len) {
    static const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
    std::vector<std::string> out(gen.index(max_len + 1));
    for (auto& t : out) {
        t = alphabet[gen.index(alphabet.size())];
    }
    return out;
}

} // namespace

TEST_CASE("tokenize lowercases and splits on whitespace") {
    const auto t = TokenSequence::tokenize("  The\tCat\n sat  ");
    REQUIRE(t.size() == 3);
    CHECK(t.tokens()[0] == "the");
    CHECK(t.tokens()[2] == "sat");
    CHECK(TokenSequence::tokenize("   ").empty());
    CHECK_THROWS_AS(TokenSequence::from_tokens({"a b"}), Error);
    CHECK_THROWS_AS(TokenSequence::from_tokens({""}), Error);
}

TEST_CASE("lcs examples") {
    CHECK(lcs_length(seq({}), seq({"a", "b"})) == 0);
    CHECK(lcs_length(seq({"a", "b", "c"}), seq({"a", "c", "d"})) == 2);
    CHECK(lcs_length(seq({"x", "y", "z"}), seq({"x", "y", "z"})) == 3);
}

TEST_CASE("lcs agrees with brute-force enumeration") {
    testing::Gen gen(3);
    for (int i = 0; i < 3000; ++i) {
        const auto a = random_tokens(gen, 6);
        const auto b = random_tokens(gen, 6);
        CHECK(lcs_length(seq(a), seq(b)) == oracle::lcs_bruteforce(a, b));
    }
}

TEST_CASE("rouge-l examples") {
    CHECK(rouge_l_f1("a4", "A4") == 1.0);
    CHECK(rouge_l_f1("", "anything") == 0.0);
    CHECK(rouge_l_f1("", "") == 1.0);
    CHECK(rouge_l_f1("x", "y") == 0.0);
    // LCS 2 of 3 on both sides
    CHECK(rouge_l_f1("a b c", "a c d") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    // LCS 3, P = 1, R = 3/4
    CHECK(rouge_l_f1("the cat sat", "the cat sat down") == doctest::Approx(6.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("value similarity") {
    CHECK(value_similarity(3, 3) == 1.0);
    CHECK(value_similarity(3, 3.5) == 0.0);
    CHECK(value_similarity(3, 3.0) == 1.0);
    CHECK(value_similarity(true, true) == 1.0);
    CHECK(value_similarity(true, false) == 0.0);
    CHECK(value_similarity("https://example.com", "https://example.com") == 1.0);
    CHECK(value_similarity(Value::parse("[1,2]"), Value::parse("[1,2]")) == 1.0);
    CHECK(value_similarity(Value::parse("[1,2]"), Value::parse("[2,1]")) == 0.0);
    CHECK(value_similarity(Value::parse(R"({"b":1,"a":2})"), Value::parse(R"({"a":2,"b":1})")) == 1.0);
    CHECK(value_similarity("3", 3) == 1.0);  // canonical strings agree
    CHECK(value_similarity(1, true) == 0.0);
    CHECK(value_similarity(nullptr, nullptr) == 1.0);
    CHECK(value_similarity(1.0, 1.05, SimilarityOptions{0.1}) == 1.0);
}

TEST_CASE("list similarity agrees with structural equality") {
    testing::Gen gen(5);
    for (int i = 0; i < 2000; ++i) {
        Value a = Value::array(), b = Value::array();
        for (std::size_t n = gen.index(3); n > 0; --n) a.push_back(static_cast<int>(gen.index(3)));
        for (std::size_t n = gen.index(3); n > 0; --n) b.push_back(static_cast<int>(gen.index(3)));
        CHECK(value_similarity(a, b) == (a == b ? 1.0 : 0.0));
    }
}

TEST_CASE("call similarity") {
    const ToolCall p{"check_wordpress", {{"url", "https://example.com"}}};
    const ToolCall g{"check_wordpress", {{"url", "https://example.com"}, {"user_agent", "Mozilla/5.0"}}};
    CHECK(call_similarity(p, g) == 0.5);
    CHECK(call_similarity(g, g) == 1.0);
    CHECK(call_similarity(ToolCall{"f", {{"a", 1}}}, ToolCall{"f", {{"b", 1}}}) == 0.0);
    CHECK(call_similarity(ToolCall{"f", {}}, ToolCall{"f", {}}) == 1.0);
}

TEST_CASE("property: symmetry and bounds") {
    testing::Gen gen(17);
    const auto schema = gen.schema();
    for (int i = 0; i < 5000; ++i) {
        const auto a = gen.words(6), b = gen.words(6);
        const double r = rouge_l_f1(a, b);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        CHECK(r == rouge_l_f1(b, a));

        const auto p = gen.call(schema), g = gen.call(schema);
        const double s = call_similarity(p, g);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(s == call_similarity(g, p));
    }
}

TEST_CASE("property: appending a reference token never lowers lcs") {
    testing::Gen gen(19);
    for (int i = 0; i < 2000; ++i) {
        auto a = random_tokens(gen, 6);
        const auto b = random_tokens(gen, 6);
        const auto before = lcs_length(seq(a), seq(b));
        a.push_back("a");
        CHECK(lcs_length(seq(a), seq(b)) >= before);
    }
}
