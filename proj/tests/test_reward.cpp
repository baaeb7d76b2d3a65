#include "generators.hpp"
#include "oracles.hpp"
#include "star/error.hpp"
#include "star/reward.hpp"

#include <doctest.h>

#include <fstream>

using namespace star;

namespace {

ToolSchema case_study_schema() { return ToolSchema::load(STAR_DATA_DIR "/fixtures/case_study_tools.json"); }

std::vector<nlohmann::json> case_study_records() {
    std::ifstream in(STAR_DATA_DIR "/fixtures/case_study_records.jsonl");
    std::vector<nlohmann::json> out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

/// Every call over {f, g} x a in {-, 1, 2} x b in {-, "x", "y"}.
std::vector<ToolCall> small_call_universe() {
    std::vector<ToolCall> out;
    const std::vector<Value> as = {nullptr, 1, 2};
    const std::vector<Value> bs = {nullptr, "x", "y"};
    for (const char* name : {"f", "g"}) {
        for (const auto& a : as) {
            for (const auto& b : bs) {
                ToolCall c{name, Value::object()};
                if (!a.is_null()) c.arguments["a"] = a;
                if (!b.is_null()) c.arguments["b"] = b;
                out.push_back(c);
            }
        }
    }
    return out;
}

void check_against_replay(const std::vector<ToolCall>& p, const std::vector<ToolCall>& g) {
    const auto result = greedy_match(p, g);
    const auto replay = oracle::replay_greedy(p, g, [](const ToolCall& a, const ToolCall& b) {
        return call_similarity(a, b);
    });
    REQUIRE(result.total_similarity == replay.total);
    REQUIRE(result.matches.size() == replay.matched);
    if (!g.empty() || !p.empty()) {
        const double denom = static_cast<double>(p.size() + g.size() - replay.matched);
        REQUIRE(tool_call_reward(p, g) == replay.total / denom);
    }
}

} // namespace

TEST_CASE("golden rewards on the bundled case studies") {
    const auto schema = case_study_schema();
    const auto records = case_study_records();
    REQUIRE(records.size() == 3);
    const double expected[] = {0.5, 1.0, 0.0};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto b = total_reward(records[i]["generation"].get<std::string>(),
                                    records[i]["ground_truth"].get<std::string>(), schema);
        CAPTURE(records[i]["id"]);
        CHECK(b.r_format == 1);
        CHECK(b.total == expected[i]);
    }
}

TEST_CASE("greedy matching examples") {
    const std::vector<ToolCall> f1{{"f", {{"x", 1}}}};
    auto one = greedy_match(f1, f1);
    REQUIRE(one.matches.size() == 1);
    CHECK(one.matches[0].similarity == 1.0);

    const std::vector<ToolCall> p{{"f", {{"a", 1}}}};
    const std::vector<ToolCall> g{{"g", {{"a", 1}}}};
    CHECK(greedy_match(p, g).matches.empty());

    const std::vector<ToolCall> p2{{"f", {{"a", 1}}}, {"f", {{"a", 2}}}};
    const std::vector<ToolCall> g2{{"f", {{"a", 2}}}};
    const auto r = greedy_match(p2, g2);
    REQUIRE(r.matches.size() == 1);
    CHECK(r.matches[0].pred_index == 0);
    CHECK(r.total_similarity == 0.0);
}

TEST_CASE("greedy ties go to the lowest ground-truth index") {
    const std::vector<ToolCall> p{{"f", {{"a", 1}}}};
    const std::vector<ToolCall> g{{"f", {{"a", 1}}}, {"f", {{"a", 1}}}};
    const auto r = greedy_match(p, g);
    REQUIRE(r.matches.size() == 1);
    CHECK(r.matches[0].gt_index == 0);
}

TEST_CASE("tool call reward examples") {
    const std::vector<ToolCall> g{{"f", {{"a", 1}}}, {"g", {{"b", "x"}}}};
    CHECK(tool_call_reward(g, g) == 1.0);
    CHECK(tool_call_reward({}, g) == 0.0);
    CHECK(tool_call_reward({}, {}) == 1.0);
    // One extra unmatched prediction widens the union.
    std::vector<ToolCall> extra = g;
    extra.push_back({"f", {{"a", 2}}});
    CHECK(tool_call_reward(extra, g) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("response reward") {
    CHECK(response_reward("same words here", "same words here") == 1.0);
    CHECK(response_reward("", "The ICAO code is KSFO") == 0.0);
    CHECK(response_reward("the cat sat", "the cat sat down") == doctest::Approx(6.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("total reward: format gate and malformed references") {
    const auto schema = case_study_schema();
    const std::string gt = "<think>t</think>\n<tool_call>\n{\"name\": \"airportstatistics\", \"arguments\": {\"iata\": \"SFO\"}}\n</tool_call>";
    const auto missing_think = total_reward(
        "<tool_call>{\"name\": \"airportstatistics\", \"arguments\": {\"iata\": \"SFO\"}}</tool_call>", gt, schema);
    CHECK(missing_think.r_format == 0);
    CHECK(missing_think.total == -1.0);
    CHECK(missing_think.r_fc == 0.0);

    // references may leave out the think block
    const auto no_think_ref = total_reward("<think>x</think>hello there", "hello there", schema);
    CHECK(no_think_ref.total == 1.0);

    CHECK_THROWS_AS(total_reward("<think>x</think>hi", "<think>a</think><tool_call>{bad</tool_call>", schema), Error);
    try {
        total_reward("<think>x</think>hi", "<think>t</think><tool_call>{\"name\": \"nope\", \"arguments\": {}}</tool_call>",
                     schema);
        FAIL("expected MalformedGroundTruth");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedGroundTruth);
    }
}

TEST_CASE("total reward: at most one branch is nonzero") {
    const auto schema = case_study_schema();
    const auto b = total_reward(
        "<think>t</think><tool_call>{\"name\": \"airportstatistics\", \"arguments\": {\"iata\": \"SFO\"}}</tool_call> extra words",
        "<think>t</think><tool_call>{\"name\": \"airportstatistics\", \"arguments\": {\"iata\": \"SFO\"}}</tool_call>", schema);
    CHECK(b.r_fc == 1.0);
    CHECK(b.r_response == 0.0);
    CHECK(b.total == 1.0);
}

TEST_CASE("custom matcher seam") {
    const auto schema = case_study_schema();
    RewardOptions opts;
    opts.matcher = [](std::span<const ToolCall>, std::span<const ToolCall>, const SimilarityOptions&) {
        return MatchResult{};
    };
    const auto rec = case_study_records()[1];
    const auto b = total_reward(rec["generation"].get<std::string>(), rec["ground_truth"].get<std::string>(), schema, opts);
    CHECK(b.total == 0.0);
}

TEST_CASE("greedy agrees with a step-by-step replay on all lists up to length 2") {
    const auto universe = small_call_universe();
    std::vector<std::vector<ToolCall>> lists = {{}};
    for (const auto& a : universe) {
        lists.push_back({a});
        for (const auto& b : universe) {
            lists.push_back({a, b});
        }
    }
    for (const auto& p : lists) {
        for (const auto& g : lists) {
            check_against_replay(p, g);
        }
    }
}

TEST_CASE("greedy agrees with a step-by-step replay on random 3x3 lists") {
    const auto universe = small_call_universe();
    testing::Gen gen(23);
    for (int i = 0; i < 20000; ++i) {
        std::vector<ToolCall> p(gen.index(4)), g(gen.index(4));
        for (auto& c : p) c = universe[gen.index(universe.size())];
        for (auto& c : g) c = universe[gen.index(universe.size())];
        check_against_replay(p, g);
    }
}

TEST_CASE("property: permuting distinct-name ground truth leaves the reward unchanged") {
    testing::Gen gen(29);
    for (int i = 0; i < 2000; ++i) {
        const auto schema = gen.schema();
        std::vector<ToolCall> g;
        for (const auto& fn : schema.functions()) {
            if (gen.coin()) {
                auto c = gen.call(schema);
                c.name = fn.name;
                c.arguments = Value::object();
                for (const auto& [pname, spec] : fn.parameters) {
                    if (gen.coin()) c.arguments[pname] = gen.scalar();
                }
                g.push_back(c);
            }
        }
        std::vector<ToolCall> p(gen.index(4));
        for (auto& c : p) c = gen.call(schema);
        const double base = tool_call_reward(p, g);
        std::shuffle(g.begin(), g.end(), gen.rng());
        CHECK(tool_call_reward(p, g) == base);
    }
}

TEST_CASE("property: range, format gate and fixed point") {
    testing::Gen gen(31);
    for (int i = 0; i < 3000; ++i) {
        const auto schema = gen.schema();
        const auto truth = render_generation(gen.valid_generation(schema, false));
        const auto generation = gen.noisy_generation(schema);
        const auto b = total_reward(generation, truth, schema);
        CHECK(b.total >= -1.0);
        CHECK(b.total <= 1.0);
        if (b.r_format == 0) {
            CHECK(b.total == -1.0);
        }
        CHECK(total_reward(truth, truth, schema).total == 1.0);
    }
}
