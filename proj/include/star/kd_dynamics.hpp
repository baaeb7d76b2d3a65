#pragma once

#include "star/divergence.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace star::toy {

/// Fixed teachers, one top-k distribution per position, over a shared
/// vocabulary. JSON: `{"vocab_size": C, "teachers": [{"indices": [...],
/// "probs": [...]}, ...]}`.
struct TeacherFamily {
    std::size_t vocab = 0;
    std::vector<TopKDistribution> teachers;

    static TeacherFamily from_json(const nlohmann::json& doc);
    static TeacherFamily load(const std::string& path);
};

struct KdFitConfig {
    LossKind kind = LossKind::Ckd;
    std::size_t steps = 500;
    double step_size = 0.5;
    std::uint64_t seed = 0;
    std::size_t m = 16;
    double lambda_tail = kDefaultTailWeight;
    double init_scale = 1.0;  // student logits start as N(0, init_scale^2)
};

/// Position-averaged diagnostics recorded after every step.
struct KdCurves {
    std::vector<double> escape_mass;
    std::vector<double> entropy;
};

/// Plain gradient descent on student logits against fixed teachers. The
/// initial logits depend only on the seed, so runs with different loss
/// kinds are paired.
KdCurves kd_fit(const TeacherFamily& family, const KdFitConfig& cfg);

} // namespace star::toy
