#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace star {

struct TopKEntry {
    std::size_t index = 0;
    double prob = 0.0;
};

/// Teacher's k most probable vocabulary entries, probabilities kept
/// un-renormalised. Construction rejects duplicate indices, probabilities
/// outside (0, 1] (zero is reported as DegenerateTeacher) and total mass
/// above 1 + 1e-9.
class TopKDistribution {
public:
    explicit TopKDistribution(std::vector<TopKEntry> entries);
    TopKDistribution(std::span<const std::size_t> indices, std::span<const double> probs);

    std::span<const TopKEntry> entries() const { return entries_; }
    std::size_t k() const { return entries_.size(); }
    double mass() const { return mass_; }
    std::size_t max_index() const;

private:
    std::vector<TopKEntry> entries_;
    double mass_ = 0.0;
};

struct LossAux {
    double divergence_part = 0.0;  // FKL-k or masked RKL term
    double tail_part = 0.0;        // un-weighted tail penalty
    double escape_mass = 0.0;      // student mass outside the teacher's top-k
    double entropy = 0.0;          // student entropy, nats
};

struct LossReport {
    double loss = 0.0;
    std::vector<double> grad;  // d loss / d student logits
    LossAux aux;
};

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double entropy(std::span<const double> probs);

/// Indices of the k largest values, largest first; ties go to the lower index.
std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k);
TopKDistribution topk_of(std::span<const double> probs, std::size_t k);

/// k = m = min(100, vocab).
std::size_t default_truncation(std::size_t vocab);
inline constexpr double kDefaultTailWeight = 10.0;

// All kernels below treat the teacher set I_k and the student set J'_m as
// constants under differentiation. Student logits must be finite and cover
// every teacher index.

/// sum_{i in I_k} p_i log(p_i / q_i). Throws DegenerateStudent if some q_i
/// underflows to zero on I_k.
LossReport fkl_topk(const TopKDistribution& teacher, std::span<const double> logits);

/// sum of q over J'_m = top-m(q) \ I_k.
LossReport tail_penalty(const TopKDistribution& teacher, std::span<const double> logits, std::size_t m);

LossReport ckd_loss(const TopKDistribution& teacher, std::span<const double> logits, std::size_t m,
                    double lambda_tail = kDefaultTailWeight);

/// sum_{i in I_k} q_i log(q_i / p_i).
LossReport rkl_topk_masked(const TopKDistribution& teacher, std::span<const double> logits);

LossReport rkl_topk_stabilized(const TopKDistribution& teacher, std::span<const double> logits, std::size_t m,
                               double lambda_tail = kDefaultTailWeight);

/// Student's confident-but-wrong set J'_m, ascending.
std::vector<std::size_t> confident_wrong_set(const TopKDistribution& teacher, std::span<const double> logits,
                                             std::size_t m);

enum class LossKind { Fkl, Tail, Ckd, RklMasked, RklStabilized };

struct LossParams {
    std::size_t m = 100;
    double lambda_tail = kDefaultTailWeight;
};

LossReport evaluate_loss(LossKind kind, const TopKDistribution& teacher, std::span<const double> logits,
                         const LossParams& params);

/// Accepts the CLI spellings fkl, tail, ckd, rkl, rkl-stab.
std::optional<LossKind> parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

} // namespace star
