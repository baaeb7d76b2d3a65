#pragma once

#include "star/chat_format.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace star {

/// Lowercased, whitespace-split tokens; never empty strings.
class TokenSequence {
public:
    TokenSequence() = default;
    static TokenSequence tokenize(std::string_view text);
    /// Tokens are taken verbatim; throws InvalidArgument on empty or
    /// whitespace-bearing tokens.
    static TokenSequence from_tokens(std::vector<std::string> tokens);

    std::span<const std::string> tokens() const { return tokens_; }
    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }

private:
    std::vector<std::string> tokens_;
};

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

/// ROUGE-L F1 over lowercased whitespace tokens. Both empty -> 1, one empty
/// or no common token -> 0.
double rouge_l_f1(std::string_view pred, std::string_view ref);

/// Text used by the "other types" comparison: strings as their raw content,
/// integral numbers without a decimal point, other numbers in shortest
/// round-trip form, containers as compact JSON with keys sorted.
std::string canonical_string(const Value& v);

struct SimilarityOptions {
    /// Absolute tolerance for numeric equality; 0 means exact.
    double numeric_tolerance = 0.0;
};

double value_similarity(const Value& pred, const Value& truth, const SimilarityOptions& opts = {});

/// Sum of per-key similarity over shared keys divided by the key-union size;
/// 1 when both argument maps are empty.
double call_similarity(const ToolCall& pred, const ToolCall& truth, const SimilarityOptions& opts = {});

} // namespace star
