/*
 * C interface to the star library: composite function-calling rewards,
 * top-k distillation losses, GRPO advantages and the toy trainer.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns a star_status; on failure a description is
 * available from star_last_error() on the same thread until the next call.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with star_string_free().
 */
#ifndef STAR_STAR_H
#define STAR_STAR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(STAR_BUILDING_LIBRARY)
#    define STAR_API __declspec(dllexport)
#  else
#    define STAR_API __declspec(dllimport)
#  endif
#else
#  define STAR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum star_status {
    STAR_OK = 0,
    STAR_E_INVALID_ARGUMENT = 1,
    STAR_E_PARSE = 2,
    STAR_E_MALFORMED_GROUND_TRUTH = 3,
    STAR_E_DEGENERATE_STUDENT = 4,
    STAR_E_DEGENERATE_TEACHER = 5,
    STAR_E_ZERO_VARIANCE = 6,
    STAR_E_LENGTH_MISMATCH = 7,
    STAR_E_IO = 8,
    STAR_E_INTERNAL = 9
} star_status;

STAR_API const char* star_version(void);
STAR_API const char* star_last_error(void);
STAR_API const char* star_status_name(star_status status);
STAR_API void star_string_free(char* s);

/* Shortest round-trip decimal text; integral values without a decimal
 * point. Returns the length written (excluding the terminator), or the
 * required size when buf is too small. */
STAR_API size_t star_format_number(double value, char* buf, size_t size);

/* ---- tool schema ------------------------------------------------------ */

typedef struct star_schema star_schema;

/* JSON text: array of functions, {"tools": [...]}, or one object per line. */
STAR_API star_status star_schema_parse(const char* text, star_schema** out);
STAR_API star_status star_schema_load(const char* path, star_schema** out);
STAR_API size_t star_schema_function_count(const star_schema* schema);
STAR_API void star_schema_free(star_schema* schema);

/* ---- rewards ---------------------------------------------------------- */

typedef struct star_reward star_reward;

/* STAR_E_MALFORMED_GROUND_TRUTH when the reference itself is invalid. */
STAR_API star_status star_reward_compute(const star_schema* schema, const char* generation,
                                         const char* ground_truth, star_reward** out);
STAR_API int star_reward_format(const star_reward* reward);
STAR_API double star_reward_fc(const star_reward* reward);
STAR_API double star_reward_response(const star_reward* reward);
STAR_API double star_reward_total(const star_reward* reward);
STAR_API size_t star_reward_match_count(const star_reward* reward);
STAR_API star_status star_reward_match(const star_reward* reward, size_t i, size_t* pred_index, size_t* gt_index,
                                       double* similarity);
STAR_API size_t star_reward_violation_count(const star_reward* reward);
/* *detail stays valid for the lifetime of the reward handle. */
STAR_API star_status star_reward_violation(const star_reward* reward, size_t i, int* rule, const char** detail);
/* Compact JSON object: r_format, r_fc, r_response, total, matches, violations. */
STAR_API star_status star_reward_to_json(const star_reward* reward, char** out);
STAR_API void star_reward_free(star_reward* reward);

STAR_API double star_rouge_l_f1(const char* pred, const char* ref);

/* ---- distillation losses ---------------------------------------------- */

typedef enum star_loss_kind {
    STAR_LOSS_FKL = 0,
    STAR_LOSS_TAIL = 1,
    STAR_LOSS_CKD = 2,
    STAR_LOSS_RKL = 3,
    STAR_LOSS_RKL_STABILIZED = 4
} star_loss_kind;

/* Accepts fkl, tail, ckd, rkl, rkl-stab. */
STAR_API star_status star_loss_kind_parse(const char* name, star_loss_kind* out);

typedef struct star_loss_summary {
    double loss;
    double divergence_part;
    double tail_part;
    double escape_mass;
    double entropy;
} star_loss_summary;

/* grad may be NULL; otherwise it receives vocab entries. */
STAR_API star_status star_kd_loss(star_loss_kind kind, const size_t* teacher_indices, const double* teacher_probs,
                                  size_t k, const double* logits, size_t vocab, size_t m, double lambda_tail,
                                  star_loss_summary* out, double* grad);

typedef struct star_gradcheck_result {
    size_t accepted;
    size_t excluded;
    double max_relative_error;
    double max_grad_sum;
    int passed;
} star_gradcheck_result;

STAR_API star_status star_gradcheck(star_loss_kind kind, uint64_t seed, size_t trials, size_t vocab, size_t k,
                                    size_t m, double lambda_tail, star_gradcheck_result* out);

/* ---- GRPO ------------------------------------------------------------- */

/* Population-std standardisation. STAR_E_ZERO_VARIANCE for constant groups. */
STAR_API star_status star_standardize_advantages(const double* rewards, size_t n, double* out);
STAR_API int star_is_homogeneous(const double* rewards, size_t n);
STAR_API double star_kl_k2(double logp_new, double logp_ref);

/* ---- toy trainer ------------------------------------------------------ */

typedef struct star_toy_task star_toy_task;
typedef struct star_train_log star_train_log;

STAR_API star_status star_toy_task_load(const char* path, star_toy_task** out);
STAR_API star_status star_toy_task_parse(const char* json, star_toy_task** out);
STAR_API void star_toy_task_free(star_toy_task* task);

/* config_json may be NULL for defaults. */
STAR_API star_status star_train_sim_rl(const star_toy_task* task, const char* config_json, uint64_t seed,
                                       star_train_log** out);
STAR_API size_t star_train_log_size(const star_train_log* log);
STAR_API star_status star_train_log_row(const star_train_log* log, size_t i, double* mean_reward,
                                        double* mean_entropy, double* filtered_fraction);
STAR_API double star_train_log_trailing_mean(const star_train_log* log, size_t window);
STAR_API star_status star_train_log_to_csv(const star_train_log* log, char** out);
STAR_API void star_train_log_free(star_train_log* log);

#ifdef __cplusplus
}
#endif

#endif /* STAR_STAR_H */
