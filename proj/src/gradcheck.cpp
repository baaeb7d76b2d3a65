#include "star/gradcheck.hpp"

#include "star/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace star {

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step) {
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = point[i];
        point[i] = orig + step;
        const double up = f(point);
        point[i] = orig - step;
        const double down = f(point);
        point[i] = orig;
        out[i] = (up - down) / (2.0 * step);
    }
    return out;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::LengthMismatch, "relative_error: size mismatch");
    }
    double diff = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    if (scale < 1e-12) {
        return 0.0;
    }
    return std::sqrt(diff) / scale;
}

bool topm_membership_stable(std::span<const double> logits, std::size_t m, double step) {
    auto reference = topk_indices(logits, m);
    std::sort(reference.begin(), reference.end());
    std::vector<double> point(logits.begin(), logits.end());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double orig = point[i];
        for (double delta : {step, -step}) {
            point[i] = orig + delta;
            auto moved = topk_indices(point, m);
            std::sort(moved.begin(), moved.end());
            if (moved != reference) {
                return false;
            }
        }
        point[i] = orig;
    }
    return true;
}

GradcheckInstance random_instance(std::uint64_t seed, std::size_t vocab, std::size_t k) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> teacher_dist(0.0, 2.0);
    std::normal_distribution<double> student_dist(0.0, 1.5);
    std::vector<double> teacher_logits(vocab);
    for (double& z : teacher_logits) {
        z = teacher_dist(rng);
    }
    std::vector<double> logits(vocab);
    for (double& z : logits) {
        z = student_dist(rng);
    }
    return {topk_of(softmax(teacher_logits), k), std::move(logits)};
}

GradcheckResult run_gradcheck(LossKind kind, const GradcheckConfig& cfg) {
    GradcheckResult result;
    result.kind = kind;
    const LossParams params{cfg.m, cfg.lambda_tail};
    const bool uses_tail = kind == LossKind::Tail || kind == LossKind::Ckd || kind == LossKind::RklStabilized;
    const std::size_t max_draws = 20 * cfg.trials + 100;
    std::seed_seq root{cfg.seed, static_cast<std::uint64_t>(kind)};
    std::mt19937_64 seeder(root);

    for (std::size_t draw = 0; draw < max_draws && result.accepted < cfg.trials; ++draw) {
        auto inst = random_instance(seeder(), cfg.vocab, cfg.k);
        if (uses_tail && !topm_membership_stable(inst.logits, cfg.m, cfg.step)) {
            ++result.excluded;
            continue;
        }
        const auto report = evaluate_loss(kind, inst.teacher, inst.logits, params);
        const auto numeric = central_difference(
            [&](std::span<const double> z) { return evaluate_loss(kind, inst.teacher, z, params).loss; },
            inst.logits, cfg.step);
        result.max_relative_error = std::max(result.max_relative_error, relative_error(report.grad, numeric));
        double sum = 0.0;
        for (double g : report.grad) {
            sum += g;
        }
        result.max_grad_sum = std::max(result.max_grad_sum, std::fabs(sum));
        ++result.accepted;
    }
    result.passed = result.accepted == cfg.trials && result.max_relative_error <= cfg.tolerance &&
                    result.max_grad_sum <= 1e-8;
    return result;
}

} // namespace star
