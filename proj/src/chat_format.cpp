#include "star/chat_format.hpp"

#include "star/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace star {

namespace {

constexpr std::string_view kWhitespace = " \t\n\r\f\v";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(kWhitespace);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(kWhitespace);
    return s.substr(first, last - first + 1);
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

// Index of the '}' closing the object that opens at `start`, honouring JSON
// string literals. npos when unbalanced.
std::size_t find_object_end(std::string_view text, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) {
                return i;
            }
        }
    }
    return std::string_view::npos;
}

bool looks_like_call(const nlohmann::json& j) {
    return j.is_object() && j.contains("name") && j.contains("arguments");
}

// Rule 3 for one <tool_call> body.
std::optional<ToolCall> parse_call_body(std::string_view body, std::size_t block_index,
                                        std::vector<FormatViolation>& errors) {
    const auto prefix = "tool_call block " + std::to_string(block_index) + ": ";
    std::string parse_error;
    auto doc = parse_json_strict(trim(body), &parse_error);
    if (!doc) {
        errors.push_back({3, prefix + "not a single JSON object (" + parse_error + ")"});
        return std::nullopt;
    }
    if (!doc->is_object()) {
        errors.push_back({3, prefix + "content is not a JSON object"});
        return std::nullopt;
    }
    if (doc->size() != 2 || !doc->contains("name") || !doc->contains("arguments")) {
        errors.push_back({3, prefix + "object must have exactly the keys \"name\" and \"arguments\""});
        return std::nullopt;
    }
    const auto& name = (*doc)["name"];
    const auto& args = (*doc)["arguments"];
    if (!name.is_string()) {
        errors.push_back({3, prefix + "\"name\" is not a string"});
        return std::nullopt;
    }
    if (!args.is_object()) {
        errors.push_back({3, prefix + "\"arguments\" is not an object"});
        return std::nullopt;
    }
    return ToolCall{name.get<std::string>(), args};
}

FunctionDef function_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) {
        throw Error(ErrorCode::InvalidArgument, "schema: function entry needs a string \"name\"");
    }
    FunctionDef def;
    def.name = j["name"].get<std::string>();
    if (auto it = j.find("description"); it != j.end() && it->is_string()) {
        def.description = it->get<std::string>();
    }
    auto params_it = j.find("parameters");
    if (params_it == j.end() || params_it->is_null()) {
        return def;
    }
    const nlohmann::json* params = &*params_it;
    if (params->is_object() && params->contains("properties") && params->value("type", "") == "object") {
        params = &(*params)["properties"];
    }
    if (!params->is_object()) {
        throw Error(ErrorCode::InvalidArgument, "schema: parameters of '" + def.name + "' must be an object");
    }
    for (const auto& [pname, pspec] : params->items()) {
        ParamSpec spec;
        if (pspec.is_object()) {
            if (auto it = pspec.find("description"); it != pspec.end() && it->is_string()) {
                spec.description = it->get<std::string>();
            }
            if (auto it = pspec.find("type"); it != pspec.end() && it->is_string()) {
                spec.type_tag = it->get<std::string>();
            }
            if (auto it = pspec.find("default"); it != pspec.end()) {
                spec.default_value = *it;
            }
        }
        def.parameters.emplace_back(pname, std::move(spec));
    }
    return def;
}

} // namespace

const ParamSpec* FunctionDef::find_parameter(std::string_view param) const {
    for (const auto& [name, spec] : parameters) {
        if (name == param) {
            return &spec;
        }
    }
    return nullptr;
}

ToolSchema::ToolSchema(std::vector<FunctionDef> functions) : functions_(std::move(functions)) {
    std::set<std::string_view> names;
    for (const auto& f : functions_) {
        if (!names.insert(f.name).second) {
            throw Error(ErrorCode::InvalidArgument, "schema: duplicate function name '" + f.name + "'");
        }
        std::set<std::string_view> params;
        for (const auto& [pname, spec] : f.parameters) {
            if (!params.insert(pname).second) {
                throw Error(ErrorCode::InvalidArgument,
                            "schema: duplicate parameter '" + pname + "' in '" + f.name + "'");
            }
        }
    }
}

ToolSchema ToolSchema::from_json(const nlohmann::json& doc) {
    std::vector<FunctionDef> functions;
    const nlohmann::json* list = &doc;
    if (doc.is_object() && doc.contains("tools")) {
        list = &doc["tools"];
    }
    if (list->is_array()) {
        for (const auto& entry : *list) {
            functions.push_back(function_from_json(entry));
        }
    } else if (list->is_object()) {
        functions.push_back(function_from_json(*list));
    } else {
        throw Error(ErrorCode::InvalidArgument, "schema: expected an array or object of functions");
    }
    return ToolSchema(std::move(functions));
}

ToolSchema ToolSchema::parse(std::string_view text) {
    auto body = trim(text);
    if (body.starts_with("<tools>")) {
        body.remove_prefix(std::string_view("<tools>").size());
    }
    if (body.ends_with("</tools>")) {
        body.remove_suffix(std::string_view("</tools>").size());
    }
    body = trim(body);

    std::string error;
    if (auto doc = parse_json_strict(body, &error)) {
        return from_json(*doc);
    }
    // One function object per line, as inside a <tools> block.
    std::vector<FunctionDef> functions;
    std::istringstream lines{std::string(body)};
    std::string line;
    while (std::getline(lines, line)) {
        const auto t = trim(line);
        if (t.empty()) {
            continue;
        }
        auto doc = parse_json_strict(t, &error);
        if (!doc) {
            throw Error(ErrorCode::Parse, "schema: " + error);
        }
        functions.push_back(function_from_json(*doc));
    }
    return ToolSchema(std::move(functions));
}

ToolSchema ToolSchema::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open schema file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const FunctionDef* ToolSchema::find(std::string_view name) const {
    for (const auto& f : functions_) {
        if (f.name == name) {
            return &f;
        }
    }
    return nullptr;
}

nlohmann::json ToolSchema::to_json() const {
    auto out = nlohmann::json::array();
    for (const auto& f : functions_) {
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [pname, spec] : f.parameters) {
            nlohmann::json p = {{"description", spec.description}, {"type", spec.type_tag}};
            if (spec.default_value) {
                p["default"] = *spec.default_value;
            }
            params[pname] = std::move(p);
        }
        out.push_back({{"name", f.name}, {"description", f.description}, {"parameters", std::move(params)}});
    }
    return out;
}

std::optional<nlohmann::json> parse_json_strict(std::string_view text, std::string* error) {
    std::vector<std::set<std::string>> open_objects;
    bool duplicate = false;
    std::string duplicate_key;
    auto callback = [&](int, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
        switch (event) {
        case nlohmann::json::parse_event_t::object_start:
            open_objects.emplace_back();
            break;
        case nlohmann::json::parse_event_t::object_end:
            if (!open_objects.empty()) {
                open_objects.pop_back();
            }
            break;
        case nlohmann::json::parse_event_t::key:
            if (!open_objects.empty() && !open_objects.back().insert(parsed.get<std::string>()).second) {
                if (!duplicate) {
                    duplicate_key = parsed.get<std::string>();
                }
                duplicate = true;
            }
            break;
        default:
            break;
        }
        return true;
    };
    try {
        auto doc = nlohmann::json::parse(text.begin(), text.end(), callback);
        if (duplicate) {
            if (error) {
                *error = "duplicate key '" + duplicate_key + "'";
            }
            return std::nullopt;
        }
        return doc;
    } catch (const nlohmann::json::exception& e) {
        if (error) {
            *error = e.what();
        }
        return std::nullopt;
    }
}

ParsedGeneration parse_generation(std::string_view raw) {
    ParsedGeneration out;

    // Think pairs: first <think> with the next </think>, non-nested.
    std::string outside;
    std::size_t pos = 0;
    std::size_t pairs = 0;
    while (true) {
        const auto open = raw.find(kThinkOpen, pos);
        if (open == std::string_view::npos) {
            break;
        }
        const auto close = raw.find(kThinkClose, open + kThinkOpen.size());
        if (close == std::string_view::npos) {
            break;
        }
        if (pairs == 0) {
            const auto begin = open + kThinkOpen.size();
            out.think = std::string(raw.substr(begin, close - begin));
        }
        ++pairs;
        outside.append(raw.substr(pos, open - pos));
        outside.push_back(' ');
        pos = close + kThinkClose.size();
    }
    outside.append(raw.substr(pos));

    const auto opens = count_occurrences(raw, kThinkOpen);
    const auto closes = count_occurrences(raw, kThinkClose);
    if (opens == 0 && closes == 0) {
        out.raw_errors.push_back({1, "missing <think>...</think> block"});
    } else if (opens != 1 || closes != 1) {
        out.raw_errors.push_back({1, "expected exactly one <think>...</think> pair, found " + std::to_string(opens) +
                                         " opening and " + std::to_string(closes) + " closing tags"});
    } else if (pairs != 1) {
        out.raw_errors.push_back({1, "</think> appears before <think>"});
    }

    // Tool-call blocks in the text outside the think block.
    const std::string_view rest = outside;
    std::string response;
    std::size_t block_index = 0;
    pos = 0;
    while (pos <= rest.size()) {
        const auto open = rest.find(kToolCallOpen, pos);
        const auto stray_close = rest.find(kToolCallClose, pos);
        if (stray_close != std::string_view::npos && stray_close < open) {
            out.raw_errors.push_back({2, "</tool_call> without a matching <tool_call>"});
            response.append(rest.substr(pos, stray_close + kToolCallClose.size() - pos));
            pos = stray_close + kToolCallClose.size();
            continue;
        }
        if (open == std::string_view::npos) {
            response.append(rest.substr(pos));
            break;
        }
        response.append(rest.substr(pos, open - pos));
        const auto body_begin = open + kToolCallOpen.size();
        const auto close = rest.find(kToolCallClose, body_begin);
        if (close == std::string_view::npos) {
            out.raw_errors.push_back({2, "<tool_call> is never closed"});
            response.append(rest.substr(open));
            break;
        }
        const auto body = rest.substr(body_begin, close - body_begin);
        if (body.find(kToolCallOpen) != std::string_view::npos) {
            out.raw_errors.push_back({2, "nested or unclosed <tool_call> inside block " + std::to_string(block_index)});
        } else if (auto call = parse_call_body(body, block_index, out.raw_errors)) {
            out.tool_calls.push_back(std::move(*call));
        }
        ++block_index;
        response.push_back(' ');
        pos = close + kToolCallClose.size();
    }
    out.response_text = std::string(trim(response));

    // Rule 2: invocations written outside <tool_call> wrappers.
    const std::string_view text = out.response_text;
    for (auto brace = text.find('{'); brace != std::string_view::npos; brace = text.find('{', brace + 1)) {
        const auto end = find_object_end(text, brace);
        if (end == std::string_view::npos) {
            break;
        }
        if (auto candidate = parse_json_strict(text.substr(brace, end - brace + 1)); candidate && looks_like_call(*candidate)) {
            out.raw_errors.push_back({2, "function invocation outside <tool_call> tags"});
            brace = end;
        }
    }
    return out;
}

FormatCheck validate_format(const ParsedGeneration& parsed, const ToolSchema& schema) {
    FormatCheck check;
    check.violations = parsed.raw_errors;
    for (std::size_t i = 0; i < parsed.tool_calls.size(); ++i) {
        const auto& call = parsed.tool_calls[i];
        const auto* fn = schema.find(call.name);
        if (fn == nullptr) {
            check.violations.push_back({4, "call " + std::to_string(i) + ": unknown function '" + call.name + "'"});
            continue;
        }
        for (const auto& [key, value] : call.arguments.items()) {
            if (fn->find_parameter(key) == nullptr) {
                check.violations.push_back(
                    {5, "call " + std::to_string(i) + ": '" + call.name + "' has no parameter '" + key + "'"});
            }
        }
    }
    check.reward = check.violations.empty() ? 1 : 0;
    return check;
}

std::string render_tool_call(const ToolCall& call) {
    constexpr auto kReplace = nlohmann::json::error_handler_t::replace;
    return "{\"name\": " + nlohmann::json(call.name).dump(-1, ' ', false, kReplace) +
           ", \"arguments\": " + call.arguments.dump(-1, ' ', false, kReplace) + "}";
}

std::string render_generation(const ParsedGeneration& parsed) {
    std::string out;
    if (parsed.think) {
        out += kThinkOpen;
        out += *parsed.think;
        out += kThinkClose;
        out += '\n';
    }
    for (const auto& call : parsed.tool_calls) {
        out += kToolCallOpen;
        out += '\n';
        out += render_tool_call(call);
        out += '\n';
        out += kToolCallClose;
        out += '\n';
    }
    out += parsed.response_text;
    return out;
}

} // namespace star
