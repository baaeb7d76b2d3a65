#include "star/reward.hpp"

#include "star/error.hpp"

namespace star {

MatchResult greedy_match(std::span<const ToolCall> pred, std::span<const ToolCall> truth,
                         const SimilarityOptions& opts) {
    MatchResult result;
    std::vector<bool> taken(truth.size(), false);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double best_score = -1.0;
        std::size_t best = truth.size();
        for (std::size_t j = 0; j < truth.size(); ++j) {
            if (taken[j] || pred[i].name != truth[j].name) {
                continue;
            }
            const double s = call_similarity(pred[i], truth[j], opts);
            if (s > best_score) {
                best_score = s;
                best = j;
            }
        }
        if (best != truth.size()) {
            taken[best] = true;
            result.matches.push_back({i, best, best_score});
            result.total_similarity += best_score;
        }
    }
    return result;
}

namespace {

double iou_reward(const MatchResult& m, std::size_t n_pred, std::size_t n_truth) {
    const std::size_t denom = n_pred + n_truth - m.matches.size();
    if (denom == 0) {
        return 1.0;
    }
    return m.total_similarity / static_cast<double>(denom);
}

} // namespace

double tool_call_reward(std::span<const ToolCall> pred, std::span<const ToolCall> truth,
                        const SimilarityOptions& opts) {
    return iou_reward(greedy_match(pred, truth, opts), pred.size(), truth.size());
}

double response_reward(std::string_view pred_text, std::string_view truth_text) {
    return rouge_l_f1(pred_text, truth_text);
}

std::vector<FormatViolation> ground_truth_violations(const ParsedGeneration& truth, const ToolSchema& schema) {
    auto check = validate_format(truth, schema);
    std::vector<FormatViolation> fatal;
    for (auto& v : check.violations) {
        // References are often stored without the reasoning block.
        if (v.rule == 1 && !truth.think && v.detail.starts_with("missing")) {
            continue;
        }
        fatal.push_back(std::move(v));
    }
    return fatal;
}

RewardBreakdown total_reward(std::string_view generation, std::string_view ground_truth, const ToolSchema& schema,
                             const RewardOptions& opts) {
    const auto truth = parse_generation(ground_truth);
    if (auto bad = ground_truth_violations(truth, schema); !bad.empty()) {
        std::string detail = "ground truth is malformed:";
        for (const auto& v : bad) {
            detail += " [rule " + std::to_string(v.rule) + "] " + v.detail + ";";
        }
        throw Error(ErrorCode::MalformedGroundTruth, detail);
    }

    const auto pred = parse_generation(generation);
    auto format = validate_format(pred, schema);

    RewardBreakdown out;
    out.r_format = format.reward;
    out.violations = std::move(format.violations);
    if (out.r_format == 0) {
        out.total = -1.0;
        return out;
    }

    if (!truth.tool_calls.empty()) {
        auto m = opts.matcher ? opts.matcher(pred.tool_calls, truth.tool_calls, opts.similarity)
                              : greedy_match(pred.tool_calls, truth.tool_calls, opts.similarity);
        out.r_fc = iou_reward(m, pred.tool_calls.size(), truth.tool_calls.size());
        out.matches = std::move(m.matches);
    } else {
        out.r_response = response_reward(pred.response_text, truth.response_text);
    }
    out.total = out.r_fc + out.r_response;
    return out;
}

} // namespace star
