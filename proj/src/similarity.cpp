#include "star/similarity.hpp"

#include "star/error.hpp"
#include "star/number_format.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace star {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_number(const Value& v) {
    return v.is_number();
}

} // namespace

TokenSequence TokenSequence::tokenize(std::string_view text) {
    TokenSequence seq;
    std::string current;
    for (char c : text) {
        if (is_space(c)) {
            if (!current.empty()) {
                seq.tokens_.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!current.empty()) {
        seq.tokens_.push_back(std::move(current));
    }
    return seq;
}

TokenSequence TokenSequence::from_tokens(std::vector<std::string> tokens) {
    for (const auto& t : tokens) {
        if (t.empty() || std::any_of(t.begin(), t.end(), is_space)) {
            throw Error(ErrorCode::InvalidArgument, "token sequence: empty or whitespace-bearing token");
        }
    }
    TokenSequence seq;
    seq.tokens_ = std::move(tokens);
    return seq;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
    const auto x = a.tokens();
    const auto y = b.tokens();
    if (x.empty() || y.empty()) {
        return 0;
    }
    // Two-row DP over the shorter sequence.
    const auto& outer = x.size() >= y.size() ? x : y;
    const auto& inner = x.size() >= y.size() ? y : x;
    std::vector<std::size_t> prev(inner.size() + 1, 0);
    std::vector<std::size_t> curr(inner.size() + 1, 0);
    for (const auto& tok : outer) {
        for (std::size_t j = 1; j <= inner.size(); ++j) {
            curr[j] = tok == inner[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[inner.size()];
}

double rouge_l_f1(std::string_view pred, std::string_view ref) {
    const auto p = TokenSequence::tokenize(pred);
    const auto r = TokenSequence::tokenize(ref);
    if (p.empty() && r.empty()) {
        return 1.0;
    }
    if (p.empty() || r.empty()) {
        return 0.0;
    }
    const auto lcs = static_cast<double>(lcs_length(p, r));
    if (lcs == 0.0) {
        return 0.0;
    }
    const double precision = lcs / static_cast<double>(p.size());
    const double recall = lcs / static_cast<double>(r.size());
    return 2.0 * precision * recall / (precision + recall);
}

std::string canonical_string(const Value& v) {
    switch (v.type()) {
    case Value::value_t::string:
        return v.get<std::string>();
    case Value::value_t::number_integer:
        return std::to_string(v.get<std::int64_t>());
    case Value::value_t::number_unsigned:
        return std::to_string(v.get<std::uint64_t>());
    case Value::value_t::number_float:
        return format_number(v.get<double>());
    case Value::value_t::boolean:
        return v.get<bool>() ? "true" : "false";
    case Value::value_t::null:
        return "null";
    case Value::value_t::array: {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += v[i].is_string() ? v[i].dump(-1, ' ', false, Value::error_handler_t::replace)
                                    : canonical_string(v[i]);
        }
        return out + "]";
    }
    case Value::value_t::object: {
        // nlohmann::json keeps object keys sorted.
        std::string out = "{";
        bool first = true;
        for (const auto& [key, item] : v.items()) {
            if (!first) {
                out += ',';
            }
            first = false;
            out += Value(key).dump(-1, ' ', false, Value::error_handler_t::replace);
            out += ':';
            out += item.is_string() ? item.dump(-1, ' ', false, Value::error_handler_t::replace)
                                    : canonical_string(item);
        }
        return out + "}";
    }
    default:
        return v.dump(-1, ' ', false, Value::error_handler_t::replace);
    }
}

double value_similarity(const Value& pred, const Value& truth, const SimilarityOptions& opts) {
    if (pred.is_string() && truth.is_string()) {
        return rouge_l_f1(pred.get_ref<const std::string&>(), truth.get_ref<const std::string&>());
    }
    if (is_number(pred) && is_number(truth)) {
        if (opts.numeric_tolerance > 0.0) {
            return std::fabs(pred.get<double>() - truth.get<double>()) <= opts.numeric_tolerance ? 1.0 : 0.0;
        }
        // nlohmann compares integer and float alternatives numerically.
        return pred == truth ? 1.0 : 0.0;
    }
    if (pred.is_boolean() && truth.is_boolean()) {
        return pred.get<bool>() == truth.get<bool>() ? 1.0 : 0.0;
    }
    return canonical_string(pred) == canonical_string(truth) ? 1.0 : 0.0;
}

double call_similarity(const ToolCall& pred, const ToolCall& truth, const SimilarityOptions& opts) {
    const auto& p = pred.arguments;
    const auto& g = truth.arguments;
    std::size_t union_size = g.size();
    double total = 0.0;
    for (const auto& [key, value] : p.items()) {
        if (auto it = g.find(key); it != g.end()) {
            total += value_similarity(value, *it, opts);
        } else {
            ++union_size;
        }
    }
    if (union_size == 0) {
        return 1.0;
    }
    return total / static_cast<double>(union_size);
}

} // namespace star
