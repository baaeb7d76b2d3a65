#include "star/star.h"

#include "star/chat_format.hpp"
#include "star/divergence.hpp"
#include "star/error.hpp"
#include "star/gradcheck.hpp"
#include "star/grpo.hpp"
#include "star/number_format.hpp"
#include "star/reward.hpp"
#include "star/similarity.hpp"
#include "star/toy_trainer.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct star_schema {
    star::ToolSchema schema;
};

struct star_reward {
    star::RewardBreakdown breakdown;
};

struct star_toy_task {
    star::toy::ToyTask task;
};

struct star_train_log {
    star::toy::TrainLog log;
};

namespace {

thread_local std::string g_last_error;

star_status to_status(star::ErrorCode code) {
    using star::ErrorCode;
    switch (code) {
    case ErrorCode::InvalidArgument: return STAR_E_INVALID_ARGUMENT;
    case ErrorCode::Parse: return STAR_E_PARSE;
    case ErrorCode::MalformedGroundTruth: return STAR_E_MALFORMED_GROUND_TRUTH;
    case ErrorCode::DegenerateStudent: return STAR_E_DEGENERATE_STUDENT;
    case ErrorCode::DegenerateTeacher: return STAR_E_DEGENERATE_TEACHER;
    case ErrorCode::ZeroVariance: return STAR_E_ZERO_VARIANCE;
    case ErrorCode::LengthMismatch: return STAR_E_LENGTH_MISMATCH;
    case ErrorCode::Io: return STAR_E_IO;
    }
    return STAR_E_INTERNAL;
}

star_status fail(star_status status, const char* message) {
    g_last_error = message;
    return status;
}

template <typename F>
star_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return STAR_OK;
    } catch (const star::Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(STAR_E_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(STAR_E_INTERNAL, e.what());
    }
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool condition, const char* message) {
    if (!condition) {
        throw star::Error(star::ErrorCode::InvalidArgument, message);
    }
}

star::LossKind to_kind(star_loss_kind kind) {
    switch (kind) {
    case STAR_LOSS_FKL: return star::LossKind::Fkl;
    case STAR_LOSS_TAIL: return star::LossKind::Tail;
    case STAR_LOSS_CKD: return star::LossKind::Ckd;
    case STAR_LOSS_RKL: return star::LossKind::RklMasked;
    case STAR_LOSS_RKL_STABILIZED: return star::LossKind::RklStabilized;
    }
    throw star::Error(star::ErrorCode::InvalidArgument, "unknown loss kind");
}

// Integral values serialise without a trailing ".0".
nlohmann::json number(double x) {
    if (std::trunc(x) == x && std::fabs(x) < 9007199254740992.0) {
        return static_cast<std::int64_t>(x);
    }
    return x;
}

nlohmann::json breakdown_json(const star::RewardBreakdown& b) {
    nlohmann::json matches = nlohmann::json::array();
    for (const auto& m : b.matches) {
        matches.push_back({{"pred_index", m.pred_index}, {"gt_index", m.gt_index}, {"similarity", number(m.similarity)}});
    }
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : b.violations) {
        violations.push_back({{"rule", v.rule}, {"detail", v.detail}});
    }
    return {{"r_format", b.r_format},       {"r_fc", number(b.r_fc)}, {"r_response", number(b.r_response)},
            {"total", number(b.total)},     {"matches", matches},     {"violations", violations}};
}

} // namespace

extern "C" {

const char* star_version(void) {
    return "1.0.0";
}

const char* star_last_error(void) {
    return g_last_error.c_str();
}

const char* star_status_name(star_status status) {
    switch (status) {
    case STAR_OK: return "ok";
    case STAR_E_INVALID_ARGUMENT: return "invalid argument";
    case STAR_E_PARSE: return "parse error";
    case STAR_E_MALFORMED_GROUND_TRUTH: return "malformed ground truth";
    case STAR_E_DEGENERATE_STUDENT: return "degenerate student";
    case STAR_E_DEGENERATE_TEACHER: return "degenerate teacher";
    case STAR_E_ZERO_VARIANCE: return "zero variance";
    case STAR_E_LENGTH_MISMATCH: return "length mismatch";
    case STAR_E_IO: return "i/o error";
    case STAR_E_INTERNAL: return "internal error";
    }
    return "unknown";
}

void star_string_free(char* s) {
    std::free(s);
}

size_t star_format_number(double value, char* buf, size_t size) {
    const auto text = star::format_number(value);
    if (buf != nullptr && size > text.size()) {
        std::memcpy(buf, text.c_str(), text.size() + 1);
        return text.size();
    }
    return text.size() + 1;
}

star_status star_schema_parse(const char* text, star_schema** out) {
    return guarded([&] {
        require(text != nullptr && out != nullptr, "star_schema_parse: null argument");
        *out = new star_schema{star::ToolSchema::parse(text)};
    });
}

star_status star_schema_load(const char* path, star_schema** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "star_schema_load: null argument");
        *out = new star_schema{star::ToolSchema::load(path)};
    });
}

size_t star_schema_function_count(const star_schema* schema) {
    return schema == nullptr ? 0 : schema->schema.functions().size();
}

void star_schema_free(star_schema* schema) {
    delete schema;
}

star_status star_reward_compute(const star_schema* schema, const char* generation, const char* ground_truth,
                                star_reward** out) {
    return guarded([&] {
        require(schema != nullptr && generation != nullptr && ground_truth != nullptr && out != nullptr,
                "star_reward_compute: null argument");
        *out = new star_reward{star::total_reward(generation, ground_truth, schema->schema)};
    });
}

int star_reward_format(const star_reward* reward) {
    return reward->breakdown.r_format;
}

double star_reward_fc(const star_reward* reward) {
    return reward->breakdown.r_fc;
}

double star_reward_response(const star_reward* reward) {
    return reward->breakdown.r_response;
}

double star_reward_total(const star_reward* reward) {
    return reward->breakdown.total;
}

size_t star_reward_match_count(const star_reward* reward) {
    return reward->breakdown.matches.size();
}

star_status star_reward_match(const star_reward* reward, size_t i, size_t* pred_index, size_t* gt_index,
                              double* similarity) {
    return guarded([&] {
        require(reward != nullptr && i < reward->breakdown.matches.size(), "star_reward_match: index out of range");
        const auto& m = reward->breakdown.matches[i];
        if (pred_index) *pred_index = m.pred_index;
        if (gt_index) *gt_index = m.gt_index;
        if (similarity) *similarity = m.similarity;
    });
}

size_t star_reward_violation_count(const star_reward* reward) {
    return reward->breakdown.violations.size();
}

star_status star_reward_violation(const star_reward* reward, size_t i, int* rule, const char** detail) {
    return guarded([&] {
        require(reward != nullptr && i < reward->breakdown.violations.size(),
                "star_reward_violation: index out of range");
        const auto& v = reward->breakdown.violations[i];
        if (rule) *rule = v.rule;
        if (detail) *detail = v.detail.c_str();
    });
}

star_status star_reward_to_json(const star_reward* reward, char** out) {
    return guarded([&] {
        require(reward != nullptr && out != nullptr, "star_reward_to_json: null argument");
        *out = dup_string(breakdown_json(reward->breakdown).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    });
}

void star_reward_free(star_reward* reward) {
    delete reward;
}

double star_rouge_l_f1(const char* pred, const char* ref) {
    return star::rouge_l_f1(pred ? pred : "", ref ? ref : "");
}

star_status star_loss_kind_parse(const char* name, star_loss_kind* out) {
    return guarded([&] {
        require(name != nullptr && out != nullptr, "star_loss_kind_parse: null argument");
        const auto kind = star::parse_loss_kind(name);
        require(kind.has_value(), "unknown loss kind (expected fkl, tail, ckd, rkl or rkl-stab)");
        switch (*kind) {
        case star::LossKind::Fkl: *out = STAR_LOSS_FKL; break;
        case star::LossKind::Tail: *out = STAR_LOSS_TAIL; break;
        case star::LossKind::Ckd: *out = STAR_LOSS_CKD; break;
        case star::LossKind::RklMasked: *out = STAR_LOSS_RKL; break;
        case star::LossKind::RklStabilized: *out = STAR_LOSS_RKL_STABILIZED; break;
        }
    });
}

star_status star_kd_loss(star_loss_kind kind, const size_t* teacher_indices, const double* teacher_probs, size_t k,
                         const double* logits, size_t vocab, size_t m, double lambda_tail, star_loss_summary* out,
                         double* grad) {
    return guarded([&] {
        require(teacher_indices != nullptr && teacher_probs != nullptr && logits != nullptr && out != nullptr,
                "star_kd_loss: null argument");
        const star::TopKDistribution teacher({teacher_indices, k}, {teacher_probs, k});
        const auto report = star::evaluate_loss(to_kind(kind), teacher, {logits, vocab}, {m, lambda_tail});
        *out = {report.loss, report.aux.divergence_part, report.aux.tail_part, report.aux.escape_mass,
                report.aux.entropy};
        if (grad != nullptr) {
            std::memcpy(grad, report.grad.data(), vocab * sizeof(double));
        }
    });
}

star_status star_gradcheck(star_loss_kind kind, uint64_t seed, size_t trials, size_t vocab, size_t k, size_t m,
                           double lambda_tail, star_gradcheck_result* out) {
    return guarded([&] {
        require(out != nullptr, "star_gradcheck: null argument");
        require(k >= 1 && k <= vocab && m >= 1 && m <= vocab, "star_gradcheck: need 1 <= k, m <= vocab");
        star::GradcheckConfig cfg;
        cfg.seed = seed;
        cfg.trials = trials;
        cfg.vocab = vocab;
        cfg.k = k;
        cfg.m = m;
        cfg.lambda_tail = lambda_tail;
        const auto r = star::run_gradcheck(to_kind(kind), cfg);
        *out = {r.accepted, r.excluded, r.max_relative_error, r.max_grad_sum, r.passed ? 1 : 0};
    });
}

star_status star_standardize_advantages(const double* rewards, size_t n, double* out) {
    return guarded([&] {
        require(rewards != nullptr && out != nullptr, "star_standardize_advantages: null argument");
        const auto adv = star::standardize_advantages({rewards, n});
        std::memcpy(out, adv.data(), n * sizeof(double));
    });
}

int star_is_homogeneous(const double* rewards, size_t n) {
    return rewards != nullptr && star::is_homogeneous({rewards, n}) ? 1 : 0;
}

double star_kl_k2(double logp_new, double logp_ref) {
    return star::kl_k2(logp_new, logp_ref);
}

star_status star_toy_task_load(const char* path, star_toy_task** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "star_toy_task_load: null argument");
        *out = new star_toy_task{star::toy::ToyTask::load(path)};
    });
}

star_status star_toy_task_parse(const char* json, star_toy_task** out) {
    return guarded([&] {
        require(json != nullptr && out != nullptr, "star_toy_task_parse: null argument");
        std::string error;
        auto doc = star::parse_json_strict(json, &error);
        if (!doc) {
            throw star::Error(star::ErrorCode::Parse, "task: " + error);
        }
        *out = new star_toy_task{star::toy::ToyTask::from_json(*doc)};
    });
}

void star_toy_task_free(star_toy_task* task) {
    delete task;
}

star_status star_train_sim_rl(const star_toy_task* task, const char* config_json, uint64_t seed,
                              star_train_log** out) {
    return guarded([&] {
        require(task != nullptr && out != nullptr, "star_train_sim_rl: null argument");
        star::toy::TrainConfig cfg;
        if (config_json != nullptr) {
            std::string error;
            auto doc = star::parse_json_strict(config_json, &error);
            if (!doc) {
                throw star::Error(star::ErrorCode::Parse, "train config: " + error);
            }
            cfg = star::toy::TrainConfig::from_json(*doc);
        }
        auto result = star::toy::train_sim_rl(task->task, cfg, seed);
        *out = new star_train_log{std::move(result.log)};
    });
}

size_t star_train_log_size(const star_train_log* log) {
    return log == nullptr ? 0 : log->log.rows.size();
}

star_status star_train_log_row(const star_train_log* log, size_t i, double* mean_reward, double* mean_entropy,
                               double* filtered_fraction) {
    return guarded([&] {
        require(log != nullptr && i < log->log.rows.size(), "star_train_log_row: index out of range");
        const auto& r = log->log.rows[i];
        if (mean_reward) *mean_reward = r.mean_reward;
        if (mean_entropy) *mean_entropy = r.mean_entropy;
        if (filtered_fraction) *filtered_fraction = r.filtered_fraction;
    });
}

double star_train_log_trailing_mean(const star_train_log* log, size_t window) {
    return log == nullptr ? 0.0 : log->log.trailing_mean_reward(window);
}

star_status star_train_log_to_csv(const star_train_log* log, char** out) {
    return guarded([&] {
        require(log != nullptr && out != nullptr, "star_train_log_to_csv: null argument");
        *out = dup_string(log->log.to_csv());
    });
}

void star_train_log_free(star_train_log* log) {
    delete log;
}

} // extern "C"
