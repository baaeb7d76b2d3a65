#pragma once

#include <span>
#include <string>
#include <vector>

namespace star {

struct TokenLogProbs {
    double logp_new = 0.0;
    double logp_old = 0.0;
    double logp_ref = 0.0;
};

struct Rollout {
    std::vector<TokenLogProbs> tokens;
    double reward = 0.0;
};

struct RolloutGroup {
    std::string prompt_id;
    std::vector<Rollout> rollouts;

    std::vector<double> rewards() const;
};

struct GrpoConfig {
    double epsilon = 0.2;
    double beta = 1e-3;
    bool filter_homogeneous = true;
};

/// (R_i - mean) / std with the population standard deviation. Throws
/// InvalidArgument for fewer than two rewards and ZeroVariance when all
/// rewards are equal.
std::vector<double> standardize_advantages(std::span<const double> rewards);

/// True when every reward in the group is identical (zero variance).
bool is_homogeneous(std::span<const double> rewards);

/// Drops zero-variance groups; survivors keep their order and contents.
std::vector<RolloutGroup> filter_homogeneous(std::vector<RolloutGroup> groups);

/// k2 estimator: 0.5 * (logp_new - logp_ref)^2.
double kl_k2(double logp_new, double logp_ref);

struct TokenTerm {
    double ratio = 1.0;
    double surrogate = 0.0;  // min(r A, clip(r) A)
    double kl = 0.0;
    double term = 0.0;       // surrogate - beta * kl
    bool clipped = false;    // the clipped branch was selected and binds
};

struct GrpoObjective {
    double value = 0.0;
    std::vector<std::vector<TokenTerm>> per_token;
};

/// (1/G) sum_i (1/|o_i|) sum_t [min(r A_i, clip(r, 1-eps, 1+eps) A_i) - beta k2].
/// Throws LengthMismatch when advantages and rollouts disagree in count and
/// InvalidArgument for empty rollouts or log-probabilities that are not
/// finite and <= 0.
GrpoObjective grpo_objective(const RolloutGroup& group, std::span<const double> advantages, const GrpoConfig& cfg);

/// d objective / d logp_new for every token, same layout as per_token.
std::vector<std::vector<double>> grpo_objective_grad(const RolloutGroup& group, std::span<const double> advantages,
                                                     const GrpoConfig& cfg);

} // namespace star
