#include "star/divergence.hpp"

#include "star/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

namespace star {

TopKDistribution::TopKDistribution(std::vector<TopKEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) {
        throw Error(ErrorCode::InvalidArgument, "top-k distribution needs k >= 1");
    }
    std::unordered_set<std::size_t> seen;
    for (const auto& e : entries_) {
        if (!seen.insert(e.index).second) {
            throw Error(ErrorCode::InvalidArgument, "top-k distribution: duplicate index " + std::to_string(e.index));
        }
        if (e.prob == 0.0) {
            throw Error(ErrorCode::DegenerateTeacher,
                        "top-k distribution: zero probability at index " + std::to_string(e.index));
        }
        if (!(e.prob > 0.0 && e.prob <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument,
                        "top-k distribution: probability outside (0, 1] at index " + std::to_string(e.index));
        }
        mass_ += e.prob;
    }
    if (mass_ > 1.0 + 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "top-k distribution: probabilities sum above 1");
    }
}

TopKDistribution::TopKDistribution(std::span<const std::size_t> indices, std::span<const double> probs)
    : TopKDistribution([&] {
          if (indices.size() != probs.size()) {
              throw Error(ErrorCode::LengthMismatch, "top-k distribution: indices and probs differ in length");
          }
          std::vector<TopKEntry> e;
          e.reserve(indices.size());
          for (std::size_t i = 0; i < indices.size(); ++i) {
              e.push_back({indices[i], probs[i]});
          }
          return e;
      }()) {}

std::size_t TopKDistribution::max_index() const {
    std::size_t m = 0;
    for (const auto& e : entries_) {
        m = std::max(m, e.index);
    }
    return m;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    if (logits.empty()) {
        return {};
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) {
        sum += std::exp(z - zmax);
    }
    const double lse = zmax + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = logits[i] - lse;
    }
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) {
        return {};
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - zmax);
        sum += out[i];
    }
    for (double& v : out) {
        v /= sum;
    }
    return out;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return h;
}

std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k) {
    k = std::min(k, values.size());
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });
    idx.resize(k);
    return idx;
}

TopKDistribution topk_of(std::span<const double> probs, std::size_t k) {
    if (k < 1 || k > probs.size()) {
        throw Error(ErrorCode::InvalidArgument, "topk_of: k must lie in [1, C]");
    }
    std::vector<TopKEntry> entries;
    for (std::size_t i : topk_indices(probs, k)) {
        entries.push_back({i, probs[i]});
    }
    return TopKDistribution(std::move(entries));
}

std::size_t default_truncation(std::size_t vocab) {
    return std::min<std::size_t>(100, vocab);
}

namespace {

// Student quantities shared by every kernel.
struct StudentState {
    std::vector<double> logq;
    std::vector<double> q;
    std::vector<bool> in_teacher;
};

StudentState prepare(const TopKDistribution& teacher, std::span<const double> logits) {
    for (double z : logits) {
        if (!std::isfinite(z)) {
            throw Error(ErrorCode::InvalidArgument, "student logits must be finite");
        }
    }
    if (teacher.max_index() >= logits.size()) {
        throw Error(ErrorCode::InvalidArgument, "teacher index " + std::to_string(teacher.max_index()) +
                                                    " out of range for vocabulary of " + std::to_string(logits.size()));
    }
    StudentState s;
    s.logq = log_softmax(logits);
    s.q.resize(logits.size());
    std::transform(s.logq.begin(), s.logq.end(), s.q.begin(), [](double l) { return std::exp(l); });
    s.in_teacher.assign(logits.size(), false);
    for (const auto& e : teacher.entries()) {
        s.in_teacher[e.index] = true;
    }
    return s;
}

void fill_aux(const StudentState& s, LossAux& aux) {
    double escape = 0.0;
    double h = 0.0;
    for (std::size_t j = 0; j < s.q.size(); ++j) {
        if (!s.in_teacher[j]) {
            escape += s.q[j];
        }
        if (s.q[j] > 0.0) {
            h -= s.q[j] * s.logq[j];
        }
    }
    aux.escape_mass = escape;
    aux.entropy = h;
}

LossReport fkl_part(const TopKDistribution& teacher, const StudentState& s) {
    LossReport r;
    double loss = 0.0;
    for (const auto& e : teacher.entries()) {
        if (s.q[e.index] == 0.0) {
            throw Error(ErrorCode::DegenerateStudent,
                        "student probability underflows to zero at teacher index " + std::to_string(e.index));
        }
        loss += e.prob * (std::log(e.prob) - s.logq[e.index]);
    }
    r.grad.resize(s.q.size());
    const double mass = teacher.mass();
    for (std::size_t j = 0; j < s.q.size(); ++j) {
        r.grad[j] = s.q[j] * mass;
    }
    for (const auto& e : teacher.entries()) {
        r.grad[e.index] -= e.prob;
    }
    r.loss = loss;
    r.aux.divergence_part = loss;
    return r;
}

LossReport tail_part(const StudentState& s, std::size_t m) {
    if (m < 1) {
        throw Error(ErrorCode::InvalidArgument, "tail penalty needs m >= 1");
    }
    LossReport r;
    double mass = 0.0;
    std::vector<bool> wrong(s.q.size(), false);
    for (std::size_t j : topk_indices(s.q, m)) {
        if (!s.in_teacher[j]) {
            wrong[j] = true;
            mass += s.q[j];
        }
    }
    r.grad.resize(s.q.size());
    for (std::size_t j = 0; j < s.q.size(); ++j) {
        r.grad[j] = (wrong[j] ? s.q[j] : 0.0) - s.q[j] * mass;
    }
    r.loss = mass;
    r.aux.tail_part = mass;
    return r;
}

LossReport rkl_part(const TopKDistribution& teacher, const StudentState& s) {
    LossReport r;
    double loss = 0.0;
    double weighted = 0.0;  // S = sum_{I_k} q_i (log(q_i/p_i) + 1)
    std::vector<double> score(s.q.size(), 0.0);
    for (const auto& e : teacher.entries()) {
        const double log_ratio = s.logq[e.index] - std::log(e.prob);
        loss += s.q[e.index] * log_ratio;
        score[e.index] = log_ratio + 1.0;
        weighted += s.q[e.index] * score[e.index];
    }
    r.grad.resize(s.q.size());
    for (std::size_t j = 0; j < s.q.size(); ++j) {
        r.grad[j] = s.q[j] * ((s.in_teacher[j] ? score[j] : 0.0) - weighted);
    }
    r.loss = loss;
    r.aux.divergence_part = loss;
    return r;
}

LossReport combine(LossReport base, const LossReport& tail, double lambda_tail) {
    if (!(lambda_tail >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "lambda_tail must be >= 0");
    }
    base.loss += lambda_tail * tail.loss;
    for (std::size_t j = 0; j < base.grad.size(); ++j) {
        base.grad[j] += lambda_tail * tail.grad[j];
    }
    base.aux.tail_part = tail.loss;
    return base;
}

} // namespace

LossReport fkl_topk(const TopKDistribution& teacher, std::span<const double> logits) {
    const auto s = prepare(teacher, logits);
    auto r = fkl_part(teacher, s);
    fill_aux(s, r.aux);
    return r;
}

LossReport tail_penalty(const TopKDistribution& teacher, std::span<const double> logits, std::size_t m) {
    const auto s = prepare(teacher, logits);
    auto r = tail_part(s, m);
    fill_aux(s, r.aux);
    return r;
}

LossReport ckd_loss(const TopKDistribution& teacher, std::span<const double> logits, std::size_t m,
                    double lambda_tail) {
    const auto s = prepare(teacher, logits);
    auto r = combine(fkl_part(teacher, s), tail_part(s, m), lambda_tail);
    fill_aux(s, r.aux);
    return r;
}

LossReport rkl_topk_masked(const TopKDistribution& teacher, std::span<const double> logits) {
    const auto s = prepare(teacher, logits);
    auto r = rkl_part(teacher, s);
    fill_aux(s, r.aux);
    return r;
}

LossReport rkl_topk_stabilized(const TopKDistribution& teacher, std::span<const double> logits, std::size_t m,
                               double lambda_tail) {
    const auto s = prepare(teacher, logits);
    auto r = combine(rkl_part(teacher, s), tail_part(s, m), lambda_tail);
    fill_aux(s, r.aux);
    return r;
}

std::vector<std::size_t> confident_wrong_set(const TopKDistribution& teacher, std::span<const double> logits,
                                             std::size_t m) {
    const auto s = prepare(teacher, logits);
    std::vector<std::size_t> out;
    for (std::size_t j : topk_indices(s.q, m)) {
        if (!s.in_teacher[j]) {
            out.push_back(j);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

LossReport evaluate_loss(LossKind kind, const TopKDistribution& teacher, std::span<const double> logits,
                         const LossParams& params) {
    switch (kind) {
    case LossKind::Fkl:
        return fkl_topk(teacher, logits);
    case LossKind::Tail:
        return tail_penalty(teacher, logits, params.m);
    case LossKind::Ckd:
        return ckd_loss(teacher, logits, params.m, params.lambda_tail);
    case LossKind::RklMasked:
        return rkl_topk_masked(teacher, logits);
    case LossKind::RklStabilized:
        return rkl_topk_stabilized(teacher, logits, params.m, params.lambda_tail);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown loss kind");
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
    if (name == "fkl") return LossKind::Fkl;
    if (name == "tail") return LossKind::Tail;
    if (name == "ckd") return LossKind::Ckd;
    if (name == "rkl") return LossKind::RklMasked;
    if (name == "rkl-stab") return LossKind::RklStabilized;
    return std::nullopt;
}

std::string_view to_string(LossKind kind) {
    switch (kind) {
    case LossKind::Fkl: return "fkl";
    case LossKind::Tail: return "tail";
    case LossKind::Ckd: return "ckd";
    case LossKind::RklMasked: return "rkl";
    case LossKind::RklStabilized: return "rkl-stab";
    }
    return "?";
}

} // namespace star
