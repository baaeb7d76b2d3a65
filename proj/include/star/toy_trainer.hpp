#pragma once

#include "star/chat_format.hpp"
#include "star/grpo.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace star::toy {

struct ToyParam {
    std::string name;
    std::vector<Value> domain;
    bool optional = false;  // declared with a default; the policy may omit it
};

struct ToyFunction {
    std::string name;
    std::vector<ToyParam> params;
};

struct ToyPrompt {
    std::string prompt_id;
    std::string ground_truth;
};

/// Synthetic function-calling task.
///
/// JSON layout: `{"tools": [...], "prompts": [{"prompt_id", "ground_truth"}]}`
/// where every tool parameter carries an `enum` array (its finite value
/// domain) and optional parameters carry a `default`. Every ground truth must
/// pass format validation against the tools.
struct ToyTask {
    ToolSchema schema;
    std::vector<ToyFunction> functions;
    std::vector<ToyPrompt> prompts;

    static ToyTask from_json(const nlohmann::json& doc);
    static ToyTask load(const std::string& path);
};

enum class RewardKind {
    SimRl,   // composite similarity reward
    Binary,  // +1 on an exact call match, -1 otherwise
};

struct Slot {
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// One categorical decision table per slot: per prompt a function choice,
/// then one value choice per parameter of each function (optional parameters
/// get an extra trailing "omit" action). All parameters live in one dense
/// vector; the reference copy used by the KL penalty is frozen at
/// construction.
class ToyPolicy {
public:
    explicit ToyPolicy(const ToyTask& task);

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    std::span<const double> reference() const { return reference_; }
    void freeze_reference() { reference_ = params_; }

    Slot function_slot(std::size_t prompt) const;
    Slot param_slot(std::size_t prompt, std::size_t function, std::size_t param) const;
    std::size_t num_prompts() const { return function_slots_.size(); }

    /// Mean categorical entropy over every slot of every prompt.
    double mean_entropy() const;

private:
    std::vector<double> params_;
    std::vector<double> reference_;
    std::vector<Slot> function_slots_;
    std::vector<std::vector<std::vector<Slot>>> param_slots_;  // [prompt][function][param]
    std::vector<Slot> all_slots_;
};

struct Trajectory {
    std::size_t prompt = 0;
    std::size_t function = 0;
    std::vector<std::size_t> choices;  // per parameter; == domain size means omitted

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

ToolCall to_call(const ToyTask& task, const Trajectory& traj);

/// Template text for a trajectory; always format-valid.
std::string render(const ToyTask& task, const Trajectory& traj);

/// Log-probability of each decision of `traj` under `params` (laid out as
/// `layout`): the function choice first, then each parameter choice.
std::vector<double> decision_logps(const ToyTask& task, const ToyPolicy& layout, std::span<const double> params,
                                   const Trajectory& traj);

double score(const ToyTask& task, const Trajectory& traj, RewardKind kind);

struct SampledGroup {
    RolloutGroup group;
    std::vector<Trajectory> trajectories;
};

SampledGroup sample_group(const ToyPolicy& policy, const ToyTask& task, std::size_t prompt, std::size_t group_size,
                          std::uint64_t seed, RewardKind kind = RewardKind::SimRl);

/// G sampled trajectories scored with the composite reward. logp_old equals
/// logp_new at sampling time; logp_ref comes from the frozen reference.
RolloutGroup rollout(const ToyPolicy& policy, const ToyTask& task, std::size_t prompt, std::size_t group_size,
                     std::uint64_t seed);

struct FrozenBatch {
    std::vector<SampledGroup> groups;
    std::vector<std::vector<double>> advantages;
};

/// Mean GRPO objective over the batch with logp_new recomputed from
/// `params`; logp_old and logp_ref stay as sampled.
double batch_objective(const ToyTask& task, const ToyPolicy& layout, std::span<const double> params,
                       const FrozenBatch& batch, const GrpoConfig& cfg);

/// Exact gradient of batch_objective with respect to `params`.
std::vector<double> batch_gradient(const ToyTask& task, const ToyPolicy& layout, std::span<const double> params,
                                   const FrozenBatch& batch, const GrpoConfig& cfg);

struct TrainConfig {
    GrpoConfig grpo;
    double learning_rate = 2.0;
    std::size_t group_size = 8;
    std::size_t iterations = 500;
    std::size_t prompts_per_iteration = 0;  // 0 -> every prompt each iteration
    RewardKind reward = RewardKind::SimRl;

    /// Keys: learning_rate, group_size, iterations, prompts_per_iteration,
    /// epsilon, beta, filter_homogeneous, reward ("sim" | "binary").
    static TrainConfig from_json(const nlohmann::json& doc);
    static TrainConfig load(const std::string& path);
};

struct TrainLogRow {
    std::size_t iteration = 0;
    double mean_reward = 0.0;
    double mean_entropy = 0.0;
    double filtered_fraction = 0.0;

    friend bool operator==(const TrainLogRow&, const TrainLogRow&) = default;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;

    /// Mean of mean_reward over the last `window` iterations.
    double trailing_mean_reward(std::size_t window) const;
    /// Header `iteration,mean_reward,mean_entropy,filtered_fraction`.
    std::string to_csv() const;
};

struct TrainResult {
    TrainLog log;
    ToyPolicy policy;
};

/// Plain gradient ascent on the GRPO objective, one step per iteration.
/// Group g of iteration t is sampled with sub-seed mix(seed, t, g).
TrainResult train_sim_rl(const ToyTask& task, const TrainConfig& cfg, std::uint64_t seed);

/// Mean reward of fresh samples from `policy` (samples per prompt).
double evaluate_policy(const ToyPolicy& policy, const ToyTask& task, std::size_t samples, std::uint64_t seed,
                       RewardKind kind);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

} // namespace star::toy
