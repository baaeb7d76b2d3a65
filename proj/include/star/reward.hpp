#pragma once

#include "star/chat_format.hpp"
#include "star/similarity.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace star {

struct CallMatch {
    std::size_t pred_index = 0;
    std::size_t gt_index = 0;
    double similarity = 0.0;

    friend bool operator==(const CallMatch&, const CallMatch&) = default;
};

struct MatchResult {
    std::vector<CallMatch> matches;
    double total_similarity = 0.0;
};

/// Greedy one-to-one assignment: predicted calls in order, each takes the
/// unmatched same-name ground-truth call with the highest similarity (lowest
/// index on ties).
MatchResult greedy_match(std::span<const ToolCall> pred, std::span<const ToolCall> truth,
                         const SimilarityOptions& opts = {});

/// Pluggable assignment strategy; greedy_match is the default.
using CallMatcher =
    std::function<MatchResult(std::span<const ToolCall>, std::span<const ToolCall>, const SimilarityOptions&)>;

/// Matched similarity mass over |P| + |G| - matched; 1 when both are empty.
double tool_call_reward(std::span<const ToolCall> pred, std::span<const ToolCall> truth,
                        const SimilarityOptions& opts = {});

double response_reward(std::string_view pred_text, std::string_view truth_text);

struct RewardBreakdown {
    int r_format = 0;
    double r_fc = 0.0;
    double r_response = 0.0;
    double total = -1.0;
    std::vector<CallMatch> matches;
    std::vector<FormatViolation> violations;
};

struct RewardOptions {
    SimilarityOptions similarity;
    CallMatcher matcher;  // empty -> greedy_match
};

/// Throws Error(MalformedGroundTruth) when the reference fails parsing or
/// schema validation. A reference may omit its think block.
RewardBreakdown total_reward(std::string_view generation, std::string_view ground_truth, const ToolSchema& schema,
                             const RewardOptions& opts = {});

/// Violations that make a ground-truth string unusable (empty when usable).
std::vector<FormatViolation> ground_truth_violations(const ParsedGeneration& truth, const ToolSchema& schema);

} // namespace star
