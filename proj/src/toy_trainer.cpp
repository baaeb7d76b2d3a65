#include "star/toy_trainer.hpp"

#include "star/divergence.hpp"
#include "star/error.hpp"
#include "star/number_format.hpp"
#include "star/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace star::toy {

namespace {

nlohmann::json read_json_file(const std::string& path, std::string_view what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + std::string(what) + " '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string error;
    auto doc = parse_json_strict(buf.str(), &error);
    if (!doc) {
        throw Error(ErrorCode::Parse, std::string(what) + " '" + path + "': " + error);
    }
    return *doc;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_categorical(std::span<const double> logits, std::mt19937_64& rng) {
    const auto probs = softmax(logits);
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return i;
        }
    }
    return probs.size() - 1;
}

std::span<const double> slot_view(std::span<const double> params, Slot s) {
    return params.subspan(s.offset, s.size);
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finaliser over a simple combination.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

ToyTask ToyTask::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("tools") || !doc.contains("prompts")) {
        throw Error(ErrorCode::InvalidArgument, "task: expected an object with \"tools\" and \"prompts\"");
    }
    ToyTask task;
    task.schema = ToolSchema::from_json(doc["tools"]);
    for (const auto& fn : task.schema.functions()) {
        const nlohmann::json* entry = nullptr;
        for (const auto& t : doc["tools"]) {
            if (t.value("name", "") == fn.name) {
                entry = &t;
            }
        }
        ToyFunction tf{fn.name, {}};
        for (const auto& [pname, spec] : fn.parameters) {
            const auto& raw = (*entry)["parameters"][pname];
            if (!raw.contains("enum") || !raw["enum"].is_array() || raw["enum"].empty()) {
                throw Error(ErrorCode::InvalidArgument,
                            "task: parameter '" + pname + "' of '" + fn.name + "' needs a non-empty \"enum\"");
            }
            tf.params.push_back({pname, raw["enum"].get<std::vector<Value>>(), spec.default_value.has_value()});
        }
        task.functions.push_back(std::move(tf));
    }
    if (task.functions.empty()) {
        throw Error(ErrorCode::InvalidArgument, "task: no functions");
    }
    std::set<std::string> ids;
    for (const auto& p : doc["prompts"]) {
        ToyPrompt prompt{p.at("prompt_id").get<std::string>(), p.at("ground_truth").get<std::string>()};
        if (!ids.insert(prompt.prompt_id).second) {
            throw Error(ErrorCode::InvalidArgument, "task: duplicate prompt id '" + prompt.prompt_id + "'");
        }
        const auto parsed = parse_generation(prompt.ground_truth);
        if (!ground_truth_violations(parsed, task.schema).empty()) {
            throw Error(ErrorCode::InvalidArgument,
                        "task: ground truth of '" + prompt.prompt_id + "' fails format validation");
        }
        task.prompts.push_back(std::move(prompt));
    }
    if (task.prompts.empty()) {
        throw Error(ErrorCode::InvalidArgument, "task: no prompts");
    }
    return task;
}

ToyTask ToyTask::load(const std::string& path) {
    return from_json(read_json_file(path, "task file"));
}

ToyPolicy::ToyPolicy(const ToyTask& task) {
    std::size_t offset = 0;
    auto take = [&](std::size_t size) {
        Slot s{offset, size};
        offset += size;
        all_slots_.push_back(s);
        return s;
    };
    for (std::size_t p = 0; p < task.prompts.size(); ++p) {
        function_slots_.push_back(take(task.functions.size()));
        std::vector<std::vector<Slot>> per_fn;
        for (const auto& fn : task.functions) {
            std::vector<Slot> per_param;
            for (const auto& param : fn.params) {
                per_param.push_back(take(param.domain.size() + (param.optional ? 1 : 0)));
            }
            per_fn.push_back(std::move(per_param));
        }
        param_slots_.push_back(std::move(per_fn));
    }
    params_.assign(offset, 0.0);
    reference_ = params_;
}

Slot ToyPolicy::function_slot(std::size_t prompt) const {
    return function_slots_.at(prompt);
}

Slot ToyPolicy::param_slot(std::size_t prompt, std::size_t function, std::size_t param) const {
    return param_slots_.at(prompt).at(function).at(param);
}

double ToyPolicy::mean_entropy() const {
    if (all_slots_.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& s : all_slots_) {
        total += entropy(softmax(slot_view(params_, s)));
    }
    return total / static_cast<double>(all_slots_.size());
}

ToolCall to_call(const ToyTask& task, const Trajectory& traj) {
    const auto& fn = task.functions.at(traj.function);
    ToolCall call{fn.name, Value::object()};
    for (std::size_t j = 0; j < fn.params.size(); ++j) {
        const auto& param = fn.params[j];
        if (traj.choices.at(j) < param.domain.size()) {
            call.arguments[param.name] = param.domain[traj.choices[j]];
        }
    }
    return call;
}

std::string render(const ToyTask& task, const Trajectory& traj) {
    ParsedGeneration gen;
    gen.think = "toy policy";
    gen.tool_calls.push_back(to_call(task, traj));
    return render_generation(gen);
}

std::vector<double> decision_logps(const ToyTask& task, const ToyPolicy& layout, std::span<const double> params,
                                   const Trajectory& traj) {
    std::vector<double> out;
    out.push_back(log_softmax(slot_view(params, layout.function_slot(traj.prompt)))[traj.function]);
    const auto& fn = task.functions.at(traj.function);
    for (std::size_t j = 0; j < fn.params.size(); ++j) {
        out.push_back(log_softmax(slot_view(params, layout.param_slot(traj.prompt, traj.function, j)))[traj.choices[j]]);
    }
    return out;
}

double score(const ToyTask& task, const Trajectory& traj, RewardKind kind) {
    const auto& truth = task.prompts.at(traj.prompt).ground_truth;
    if (kind == RewardKind::SimRl) {
        return total_reward(render(task, traj), truth, task.schema).total;
    }
    const auto parsed = parse_generation(truth);
    const std::vector<ToolCall> pred{to_call(task, traj)};
    return parsed.tool_calls == pred ? 1.0 : -1.0;
}

SampledGroup sample_group(const ToyPolicy& policy, const ToyTask& task, std::size_t prompt, std::size_t group_size,
                          std::uint64_t seed, RewardKind kind) {
    if (group_size < 2) {
        throw Error(ErrorCode::InvalidArgument, "rollout group size must be >= 2");
    }
    std::mt19937_64 rng(seed);
    SampledGroup out;
    out.group.prompt_id = task.prompts.at(prompt).prompt_id;
    const auto params = policy.parameters();
    for (std::size_t g = 0; g < group_size; ++g) {
        Trajectory traj;
        traj.prompt = prompt;
        traj.function = sample_categorical(slot_view(params, policy.function_slot(prompt)), rng);
        const auto& fn = task.functions[traj.function];
        for (std::size_t j = 0; j < fn.params.size(); ++j) {
            traj.choices.push_back(sample_categorical(slot_view(params, policy.param_slot(prompt, traj.function, j)), rng));
        }
        const auto lp_new = decision_logps(task, policy, params, traj);
        const auto lp_ref = decision_logps(task, policy, policy.reference(), traj);
        Rollout r;
        for (std::size_t t = 0; t < lp_new.size(); ++t) {
            r.tokens.push_back({lp_new[t], lp_new[t], lp_ref[t]});
        }
        r.reward = score(task, traj, kind);
        out.group.rollouts.push_back(std::move(r));
        out.trajectories.push_back(std::move(traj));
    }
    return out;
}

RolloutGroup rollout(const ToyPolicy& policy, const ToyTask& task, std::size_t prompt, std::size_t group_size,
                     std::uint64_t seed) {
    return sample_group(policy, task, prompt, group_size, seed, RewardKind::SimRl).group;
}

namespace {

RolloutGroup with_current_logps(const ToyTask& task, const ToyPolicy& layout, std::span<const double> params,
                                const SampledGroup& sg) {
    RolloutGroup group = sg.group;
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        const auto lp = decision_logps(task, layout, params, sg.trajectories[i]);
        for (std::size_t t = 0; t < lp.size(); ++t) {
            group.rollouts[i].tokens[t].logp_new = lp[t];
        }
    }
    return group;
}

// d logsoftmax(z)[a] / dz = e_a - softmax(z), scaled by `weight`.
void accumulate_slot(std::span<const double> params, Slot slot, std::size_t action, double weight,
                     std::vector<double>& grad) {
    const auto probs = softmax(slot_view(params, slot));
    for (std::size_t b = 0; b < slot.size; ++b) {
        grad[slot.offset + b] += weight * ((b == action ? 1.0 : 0.0) - probs[b]);
    }
}

} // namespace

double batch_objective(const ToyTask& task, const ToyPolicy& layout, std::span<const double> params,
                       const FrozenBatch& batch, const GrpoConfig& cfg) {
    if (batch.groups.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t g = 0; g < batch.groups.size(); ++g) {
        total += grpo_objective(with_current_logps(task, layout, params, batch.groups[g]), batch.advantages.at(g), cfg).value;
    }
    return total / static_cast<double>(batch.groups.size());
}

std::vector<double> batch_gradient(const ToyTask& task, const ToyPolicy& layout, std::span<const double> params,
                                   const FrozenBatch& batch, const GrpoConfig& cfg) {
    std::vector<double> grad(params.size(), 0.0);
    if (batch.groups.empty()) {
        return grad;
    }
    const double scale = 1.0 / static_cast<double>(batch.groups.size());
    for (std::size_t g = 0; g < batch.groups.size(); ++g) {
        const auto& sg = batch.groups[g];
        const auto group = with_current_logps(task, layout, params, sg);
        const auto d_logp = grpo_objective_grad(group, batch.advantages.at(g), cfg);
        for (std::size_t i = 0; i < sg.trajectories.size(); ++i) {
            const auto& traj = sg.trajectories[i];
            accumulate_slot(params, layout.function_slot(traj.prompt), traj.function, scale * d_logp[i][0], grad);
            for (std::size_t j = 0; j < traj.choices.size(); ++j) {
                accumulate_slot(params, layout.param_slot(traj.prompt, traj.function, j), traj.choices[j],
                                scale * d_logp[i][j + 1], grad);
            }
        }
    }
    return grad;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "train config must be a JSON object");
    }
    static const std::set<std::string> known = {"learning_rate", "group_size",         "iterations", "prompts_per_iteration",
                                                "epsilon",       "beta",               "reward",     "filter_homogeneous"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) {
            throw Error(ErrorCode::InvalidArgument, "train config: unknown key '" + key + "'");
        }
    }
    TrainConfig cfg;
    try {
        cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
        cfg.group_size = doc.value("group_size", cfg.group_size);
        cfg.iterations = doc.value("iterations", cfg.iterations);
        cfg.prompts_per_iteration = doc.value("prompts_per_iteration", cfg.prompts_per_iteration);
        cfg.grpo.epsilon = doc.value("epsilon", cfg.grpo.epsilon);
        cfg.grpo.beta = doc.value("beta", cfg.grpo.beta);
        cfg.grpo.filter_homogeneous = doc.value("filter_homogeneous", cfg.grpo.filter_homogeneous);
        const auto reward = doc.value("reward", std::string("sim"));
        if (reward == "sim") {
            cfg.reward = RewardKind::SimRl;
        } else if (reward == "binary") {
            cfg.reward = RewardKind::Binary;
        } else {
            throw Error(ErrorCode::InvalidArgument, "train config: reward must be \"sim\" or \"binary\"");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("train config: ") + e.what());
    }
    if (cfg.group_size < 2 || !(cfg.grpo.epsilon > 0.0) || !(cfg.grpo.beta >= 0.0) || !(cfg.learning_rate >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "train config: need group_size >= 2, epsilon > 0, beta >= 0, learning_rate >= 0");
    }
    return cfg;
}

TrainConfig TrainConfig::load(const std::string& path) {
    return from_json(read_json_file(path, "config file"));
}

double TrainLog::trailing_mean_reward(std::size_t window) const {
    if (rows.empty()) {
        return 0.0;
    }
    window = std::min(window, rows.size());
    double total = 0.0;
    for (auto it = rows.end() - static_cast<std::ptrdiff_t>(window); it != rows.end(); ++it) {
        total += it->mean_reward;
    }
    return total / static_cast<double>(window);
}

std::string TrainLog::to_csv() const {
    std::string out = "iteration,mean_reward,mean_entropy,filtered_fraction\n";
    for (const auto& r : rows) {
        out += std::to_string(r.iteration) + ',' + format_number(r.mean_reward) + ',' + format_number(r.mean_entropy) +
               ',' + format_number(r.filtered_fraction) + '\n';
    }
    return out;
}

TrainResult train_sim_rl(const ToyTask& task, const TrainConfig& cfg, std::uint64_t seed) {
    ToyPolicy policy(task);
    TrainLog log;
    const std::size_t n_prompts = task.prompts.size();
    const std::size_t per_iter =
        cfg.prompts_per_iteration == 0 ? n_prompts : std::min(cfg.prompts_per_iteration, n_prompts);
    std::vector<std::size_t> order(n_prompts);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 batch_rng(mix_seed(seed, 0xba7c4, 0));

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        if (per_iter < n_prompts) {
            std::shuffle(order.begin(), order.end(), batch_rng);
        }
        FrozenBatch batch;
        double reward_sum = 0.0;
        std::size_t reward_count = 0;
        std::size_t filtered = 0;
        for (std::size_t b = 0; b < per_iter; ++b) {
            const std::size_t prompt = order[b];
            auto sg = sample_group(policy, task, prompt, cfg.group_size, mix_seed(seed, it, prompt), cfg.reward);
            const auto rewards = sg.group.rewards();
            for (double r : rewards) {
                reward_sum += r;
                ++reward_count;
            }
            if (is_homogeneous(rewards)) {
                ++filtered;
                if (cfg.grpo.filter_homogeneous) {
                    continue;
                }
                batch.advantages.emplace_back(rewards.size(), 0.0);
            } else {
                batch.advantages.push_back(standardize_advantages(rewards));
            }
            batch.groups.push_back(std::move(sg));
        }
        if (!batch.groups.empty() && cfg.learning_rate > 0.0) {
            const auto grad = batch_gradient(task, policy, policy.parameters(), batch, cfg.grpo);
            auto params = policy.parameters();
            for (std::size_t i = 0; i < params.size(); ++i) {
                params[i] += cfg.learning_rate * grad[i];
            }
        }
        log.rows.push_back({it, reward_sum / static_cast<double>(reward_count), policy.mean_entropy(),
                            static_cast<double>(filtered) / static_cast<double>(per_iter)});
    }
    return {std::move(log), std::move(policy)};
}

double evaluate_policy(const ToyPolicy& policy, const ToyTask& task, std::size_t samples, std::uint64_t seed,
                       RewardKind kind) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < task.prompts.size(); ++p) {
        const auto sg = sample_group(policy, task, p, std::max<std::size_t>(samples, 2), mix_seed(seed, 0xe7a1, p), kind);
        for (double r : sg.group.rewards()) {
            total += r;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

} // namespace star::toy
