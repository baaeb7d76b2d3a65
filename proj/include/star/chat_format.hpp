#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace star {

/// Argument values carried by a tool call: string, number, boolean, list,
/// object or null.
using Value = nlohmann::json;

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kToolCallOpen = "<tool_call>";
inline constexpr std::string_view kToolCallClose = "</tool_call>";

struct ParamSpec {
    std::string description;
    std::string type_tag;
    std::optional<Value> default_value;
};

struct FunctionDef {
    std::string name;
    std::string description;
    /// Declaration order is kept; names are unique.
    std::vector<std::pair<std::string, ParamSpec>> parameters;

    const ParamSpec* find_parameter(std::string_view param) const;
};

/// The set of functions a generation may call.
///
/// Accepts the `<tools>` block layout: one object per function carrying
/// `name`, `description` and a `parameters` map of
/// `{description, type, default}` entries. A JSON array of such objects, an
/// object with a `tools` array, or newline-separated objects (optionally
/// wrapped in `<tools>` tags) are all understood. JSON-schema style
/// `{"type": "object", "properties": {...}}` parameter blocks are unwrapped.
class ToolSchema {
public:
    ToolSchema() = default;
    /// Throws Error(InvalidArgument) on duplicate function or parameter names.
    explicit ToolSchema(std::vector<FunctionDef> functions);

    static ToolSchema from_json(const nlohmann::json& doc);
    static ToolSchema parse(std::string_view text);
    static ToolSchema load(const std::string& path);

    const FunctionDef* find(std::string_view name) const;
    const std::vector<FunctionDef>& functions() const { return functions_; }
    nlohmann::json to_json() const;

private:
    std::vector<FunctionDef> functions_;
};

struct ToolCall {
    std::string name;
    Value arguments = Value::object();

    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

struct FormatViolation {
    int rule = 0;  // 1..5
    std::string detail;

    friend bool operator==(const FormatViolation&, const FormatViolation&) = default;
};

struct ParsedGeneration {
    std::optional<std::string> think;
    std::vector<ToolCall> tool_calls;
    std::string response_text;
    std::vector<FormatViolation> raw_errors;

    friend bool operator==(const ParsedGeneration&, const ParsedGeneration&) = default;
};

struct FormatCheck {
    int reward = 0;
    std::vector<FormatViolation> violations;
};

/// Total: malformed structure becomes rule 1-3 violations, never an exception.
ParsedGeneration parse_generation(std::string_view raw);

/// Adds the schema-dependent rules (4: known function, 5: argument keys are a
/// subset of the declared parameters) to the parse-time violations.
FormatCheck validate_format(const ParsedGeneration& parsed, const ToolSchema& schema);

/// `{"name": ..., "arguments": ...}` as compact JSON.
std::string render_tool_call(const ToolCall& call);

/// Template text for a generation; re-parsing the output of a violation-free
/// generation yields an equal structure.
std::string render_generation(const ParsedGeneration& parsed);

/// JSON parse that rejects duplicate object keys at any depth.
std::optional<nlohmann::json> parse_json_strict(std::string_view text, std::string* error = nullptr);

} // namespace star
