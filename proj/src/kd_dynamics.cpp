#include "star/kd_dynamics.hpp"

#include "star/chat_format.hpp"
#include "star/error.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace star::toy {

TeacherFamily TeacherFamily::from_json(const nlohmann::json& doc) {
    TeacherFamily family;
    try {
        family.vocab = doc.at("vocab_size").get<std::size_t>();
        for (const auto& t : doc.at("teachers")) {
            const auto indices = t.at("indices").get<std::vector<std::size_t>>();
            const auto probs = t.at("probs").get<std::vector<double>>();
            family.teachers.emplace_back(indices, probs);
            if (family.teachers.back().max_index() >= family.vocab) {
                throw Error(ErrorCode::InvalidArgument, "teacher family: index beyond vocab_size");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("teacher family: ") + e.what());
    }
    return family;
}

TeacherFamily TeacherFamily::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open teacher family '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string error;
    auto doc = parse_json_strict(buf.str(), &error);
    if (!doc) {
        throw Error(ErrorCode::Parse, "teacher family '" + path + "': " + error);
    }
    return from_json(*doc);
}

KdCurves kd_fit(const TeacherFamily& family, const KdFitConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> init(0.0, cfg.init_scale);
    std::vector<std::vector<double>> students(family.teachers.size(), std::vector<double>(family.vocab));
    for (auto& z : students) {
        for (double& v : z) {
            v = init(rng);
        }
    }
    const LossParams params{cfg.m, cfg.lambda_tail};
    const auto n = static_cast<double>(students.size());
    KdCurves curves;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        double escape = 0.0;
        double h = 0.0;
        for (std::size_t pos = 0; pos < students.size(); ++pos) {
            auto& z = students[pos];
            const auto report = evaluate_loss(cfg.kind, family.teachers[pos], z, params);
            for (std::size_t j = 0; j < z.size(); ++j) {
                z[j] -= cfg.step_size * report.grad[j];
            }
            const auto q = softmax(z);
            double inside = 0.0;
            for (const auto& e : family.teachers[pos].entries()) {
                inside += q[e.index];
            }
            escape += 1.0 - inside;
            h += entropy(q);
        }
        curves.escape_mass.push_back(escape / n);
        curves.entropy.push_back(h / n);
    }
    return curves;
}

} // namespace star::toy
