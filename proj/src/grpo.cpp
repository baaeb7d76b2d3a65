#include "star/grpo.hpp"

#include "star/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace star {

std::vector<double> RolloutGroup::rewards() const {
    std::vector<double> out;
    out.reserve(rollouts.size());
    for (const auto& r : rollouts) {
        out.push_back(r.reward);
    }
    return out;
}

bool is_homogeneous(std::span<const double> rewards) {
    return std::adjacent_find(rewards.begin(), rewards.end(), std::not_equal_to<>()) == rewards.end();
}

std::vector<double> standardize_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "advantage standardisation needs a group of at least 2");
    }
    if (is_homogeneous(rewards)) {
        throw Error(ErrorCode::ZeroVariance, "all rewards in the group are equal");
    }
    const auto n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) {
        mean += r;
    }
    mean /= n;
    double var = 0.0;
    for (double r : rewards) {
        var += (r - mean) * (r - mean);
    }
    const double sd = std::sqrt(var / n);
    std::vector<double> out;
    out.reserve(rewards.size());
    for (double r : rewards) {
        out.push_back((r - mean) / sd);
    }
    return out;
}

std::vector<RolloutGroup> filter_homogeneous(std::vector<RolloutGroup> groups) {
    std::erase_if(groups, [](const RolloutGroup& g) { return is_homogeneous(g.rewards()); });
    return groups;
}

double kl_k2(double logp_new, double logp_ref) {
    const double d = logp_new - logp_ref;
    return 0.5 * d * d;
}

namespace {

void check_group(const RolloutGroup& group, std::span<const double> advantages) {
    if (advantages.size() != group.rollouts.size()) {
        throw Error(ErrorCode::LengthMismatch, "group '" + group.prompt_id + "': " +
                                                   std::to_string(advantages.size()) + " advantages for " +
                                                   std::to_string(group.rollouts.size()) + " rollouts");
    }
    if (group.rollouts.empty()) {
        throw Error(ErrorCode::InvalidArgument, "group '" + group.prompt_id + "' has no rollouts");
    }
    auto valid = [](double lp) { return std::isfinite(lp) && lp <= 0.0; };
    for (const auto& r : group.rollouts) {
        if (r.tokens.empty()) {
            throw Error(ErrorCode::InvalidArgument, "group '" + group.prompt_id + "' has an empty rollout");
        }
        for (const auto& t : r.tokens) {
            if (!valid(t.logp_new) || !valid(t.logp_old) || !valid(t.logp_ref)) {
                throw Error(ErrorCode::InvalidArgument,
                            "group '" + group.prompt_id + "': log-probabilities must be finite and <= 0");
            }
        }
    }
}

} // namespace

GrpoObjective grpo_objective(const RolloutGroup& group, std::span<const double> advantages, const GrpoConfig& cfg) {
    check_group(group, advantages);
    GrpoObjective out;
    out.per_token.resize(group.rollouts.size());
    const double lo = 1.0 - cfg.epsilon;
    const double hi = 1.0 + cfg.epsilon;
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        const auto& tokens = group.rollouts[i].tokens;
        const double adv = advantages[i];
        double sum = 0.0;
        for (const auto& t : tokens) {
            TokenTerm term;
            term.ratio = std::exp(t.logp_new - t.logp_old);
            const double unclipped = term.ratio * adv;
            const double clipped = std::clamp(term.ratio, lo, hi) * adv;
            term.surrogate = std::min(unclipped, clipped);
            term.clipped = clipped < unclipped;
            term.kl = kl_k2(t.logp_new, t.logp_ref);
            term.term = term.surrogate - cfg.beta * term.kl;
            sum += term.term;
            out.per_token[i].push_back(term);
        }
        out.value += sum / static_cast<double>(tokens.size());
    }
    out.value /= static_cast<double>(group.rollouts.size());
    return out;
}

std::vector<std::vector<double>> grpo_objective_grad(const RolloutGroup& group, std::span<const double> advantages,
                                                     const GrpoConfig& cfg) {
    check_group(group, advantages);
    const double lo = 1.0 - cfg.epsilon;
    const double hi = 1.0 + cfg.epsilon;
    const auto n_groups = static_cast<double>(group.rollouts.size());
    std::vector<std::vector<double>> out(group.rollouts.size());
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        const auto& tokens = group.rollouts[i].tokens;
        const double adv = advantages[i];
        const double scale = 1.0 / (n_groups * static_cast<double>(tokens.size()));
        for (const auto& t : tokens) {
            const double ratio = std::exp(t.logp_new - t.logp_old);
            const double unclipped = ratio * adv;
            const double clipped = std::clamp(ratio, lo, hi) * adv;
            // The clipped branch is flat in the ratio outside [lo, hi].
            const bool flat = clipped < unclipped && (ratio < lo || ratio > hi);
            const double d_surrogate = flat ? 0.0 : adv * ratio;
            const double d_kl = cfg.beta * (t.logp_new - t.logp_ref);
            out[i].push_back(scale * (d_surrogate - d_kl));
        }
    }
    return out;
}

} // namespace star
