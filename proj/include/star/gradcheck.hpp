#pragma once

#include "star/divergence.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace star {

/// Central differences of a scalar function, one coordinate at a time.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step);

/// ||a - b|| / max(||a||, ||b||); 0 when both norms are below 1e-12.
double relative_error(std::span<const double> a, std::span<const double> b);

/// True when the student's top-m set is identical at every +-step
/// single-coordinate perturbation of the logits, i.e. the piecewise gradient
/// is well defined for a finite-difference comparison.
bool topm_membership_stable(std::span<const double> logits, std::size_t m, double step);

struct GradcheckConfig {
    std::size_t vocab = 32;
    std::size_t k = 8;
    std::size_t m = 16;
    double lambda_tail = kDefaultTailWeight;
    std::size_t trials = 50;  // accepted instances required
    std::uint64_t seed = 0;
    double step = 1e-5;
    double tolerance = 1e-6;
};

struct GradcheckResult {
    LossKind kind = LossKind::Fkl;
    std::size_t accepted = 0;
    std::size_t excluded = 0;  // near a top-m membership boundary
    double max_relative_error = 0.0;
    double max_grad_sum = 0.0;  // max |sum_j grad_j|
    bool passed = true;
};

/// Random instance: teacher top-k of a softmax over N(0, 2^2) logits,
/// student logits N(0, 1.5^2).
struct GradcheckInstance {
    TopKDistribution teacher;
    std::vector<double> logits;
};
GradcheckInstance random_instance(std::uint64_t seed, std::size_t vocab, std::size_t k);

GradcheckResult run_gradcheck(LossKind kind, const GradcheckConfig& cfg);

} // namespace star
