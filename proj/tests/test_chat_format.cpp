#include "generators.hpp"
#include "star/chat_format.hpp"
#include "star/error.hpp"

#include <doctest.h>

using namespace star;

namespace {

ToolSchema one_fn_schema() {
    return ToolSchema::parse(R"([{"name": "f", "description": "d", "parameters": {
        "a": {"description": "x", "type": "int"}, "b": {"description": "y", "type": "str", "default": "z"}}}])");
}

bool has_rule(const std::vector<FormatViolation>& v, int rule) {
    return std::any_of(v.begin(), v.end(), [rule](const FormatViolation& f) { return f.rule == rule; });
}

} // namespace

TEST_CASE("parse: minimal well-formed generation") {
    const auto p = parse_generation(R"(<think>x</think><tool_call>{"name":"f","arguments":{}}</tool_call>)");
    REQUIRE(p.think.has_value());
    CHECK(*p.think == "x");
    REQUIRE(p.tool_calls.size() == 1);
    CHECK(p.tool_calls[0].name == "f");
    CHECK(p.tool_calls[0].arguments == Value::object());
    CHECK(p.raw_errors.empty());
    CHECK(p.response_text.empty());
}

TEST_CASE("parse: two think pairs is a rule-1 violation") {
    const auto p = parse_generation("<think>a</think><think>b</think>hello");
    CHECK(has_rule(p.raw_errors, 1));
    CHECK(p.response_text == "hello");
}

TEST_CASE("parse: plain-text answer") {
    const auto p = parse_generation("<think>t</think>The ICAO code is KSFO.");
    CHECK(*p.think == "t");
    CHECK(p.tool_calls.empty());
    CHECK(p.response_text == "The ICAO code is KSFO.");
    CHECK(p.raw_errors.empty());
}

TEST_CASE("parse: missing and unclosed think") {
    CHECK(has_rule(parse_generation("hello").raw_errors, 1));
    CHECK(has_rule(parse_generation("<think>open forever").raw_errors, 1));
    CHECK(has_rule(parse_generation("</think>hi").raw_errors, 1));
}

TEST_CASE("parse: wrapping problems are rule 2") {
    CHECK(has_rule(parse_generation(R"(<think>t</think><tool_call>{"name":"f","arguments":{}})").raw_errors, 2));
    CHECK(has_rule(parse_generation(R"(<think>t</think>x</tool_call>)").raw_errors, 2));
    CHECK(has_rule(parse_generation(R"(<think>t</think>{"name": "f", "arguments": {}})").raw_errors, 2));
}

TEST_CASE("parse: block content problems are rule 3") {
    const char* bad[] = {
        R"(<think>t</think><tool_call>not json</tool_call>)",
        R"(<think>t</think><tool_call>[1, 2]</tool_call>)",
        R"(<think>t</think><tool_call>{"name": "f"}</tool_call>)",
        R"(<think>t</think><tool_call>{"name": "f", "arguments": {}, "extra": 1}</tool_call>)",
        R"(<think>t</think><tool_call>{"name": 3, "arguments": {}}</tool_call>)",
        R"(<think>t</think><tool_call>{"name": "f", "arguments": []}</tool_call>)",
        R"(<think>t</think><tool_call>{"name": "f", "name": "g", "arguments": {}}</tool_call>)",
        R"(<think>t</think><tool_call>{"name": "f", "arguments": {}} {"name": "g", "arguments": {}}</tool_call>)",
    };
    for (const char* text : bad) {
        CAPTURE(text);
        CHECK(has_rule(parse_generation(text).raw_errors, 3));
    }
}

TEST_CASE("parse: text between blocks joins the response") {
    const auto p = parse_generation(
        "<think>t</think>before <tool_call>{\"name\":\"f\",\"arguments\":{}}</tool_call> after");
    CHECK(p.raw_errors.empty());
    CHECK(p.response_text.find("before") != std::string::npos);
    CHECK(p.response_text.find("after") != std::string::npos);
}

TEST_CASE("validate: rules 4 and 5") {
    const auto schema = one_fn_schema();
    auto ok = validate_format(parse_generation(R"(<think>t</think><tool_call>{"name":"f","arguments":{"a":1}}</tool_call>)"), schema);
    CHECK(ok.reward == 1);
    CHECK(ok.violations.empty());

    auto unknown = validate_format(parse_generation(R"(<think>t</think><tool_call>{"name":"g","arguments":{}}</tool_call>)"), schema);
    CHECK(unknown.reward == 0);
    CHECK(has_rule(unknown.violations, 4));

    auto extra = validate_format(parse_generation(R"(<think>t</think><tool_call>{"name":"f","arguments":{"c":1}}</tool_call>)"), schema);
    CHECK(extra.reward == 0);
    CHECK(has_rule(extra.violations, 5));
}

TEST_CASE("validate: empty generation with a think block is valid") {
    const auto check = validate_format(parse_generation("<think></think>"), one_fn_schema());
    CHECK(check.reward == 1);
}

TEST_CASE("schema: accepted layouts") {
    const auto a = ToolSchema::parse(R"(<tools>
{"name": "f", "description": "", "parameters": {"x": {"type": "int"}}}
{"name": "g", "description": "", "parameters": {}}
</tools>)");
    CHECK(a.functions().size() == 2);

    const auto b = ToolSchema::parse(R"({"tools": [{"name": "f", "parameters": {"type": "object",
        "properties": {"x": {"type": "int", "default": 2}}}}]})");
    REQUIRE(b.find("f") != nullptr);
    REQUIRE(b.find("f")->find_parameter("x") != nullptr);
    CHECK(*b.find("f")->find_parameter("x")->default_value == 2);

    CHECK_THROWS_AS(ToolSchema::parse(R"([{"name": "f"}, {"name": "f"}])"), Error);
    CHECK_THROWS_AS(ToolSchema::parse("garbage"), Error);
}

TEST_CASE("property: parse is total on arbitrary bytes") {
    testing::Gen gen(7);
    const auto schema = gen.schema();
    for (int i = 0; i < 10000; ++i) {
        const auto text = (i % 2) ? gen.random_text(60) : gen.noisy_generation(schema);
        ParsedGeneration p;
        CHECK_NOTHROW(p = parse_generation(text));
        const auto check = validate_format(p, schema);
        for (const auto& v : check.violations) {
            CHECK(v.rule >= 1);
            CHECK(v.rule <= 5);
        }
    }
}

TEST_CASE("property: render then parse round-trips") {
    testing::Gen gen(11);
    for (int i = 0; i < 2000; ++i) {
        const auto schema = gen.schema();
        const auto g = gen.valid_generation(schema);
        const auto text = render_generation(g);
        const auto back = parse_generation(text);
        CAPTURE(text);
        CHECK(back == g);
        CHECK(validate_format(back, schema).violations.empty());
    }
}

TEST_CASE("property: format reward is 1 exactly when violations are empty") {
    testing::Gen gen(13);
    for (int i = 0; i < 3000; ++i) {
        const auto schema = gen.schema();
        const auto check = validate_format(parse_generation(gen.noisy_generation(schema)), schema);
        CHECK((check.reward == 1) == check.violations.empty());
    }
}
