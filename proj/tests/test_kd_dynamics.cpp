#include "star/error.hpp"
#include "star/kd_dynamics.hpp"

#include <doctest.h>

using namespace star;
using namespace star::toy;

namespace {

TeacherFamily concentrated_family() {
    return TeacherFamily::from_json(nlohmann::json::parse(R"({"vocab_size": 12, "teachers": [
        {"indices": [0, 3, 7], "probs": [0.7, 0.2, 0.09]},
        {"indices": [5, 1, 2], "probs": [0.5, 0.3, 0.19]}]})"));
}

} // namespace

TEST_CASE("teacher family parsing") {
    const auto fam = TeacherFamily::load(STAR_DATA_DIR "/kd_adversarial.json");
    CHECK(fam.vocab == 64);
    CHECK(fam.teachers.size() == 8);
    CHECK_THROWS_AS(TeacherFamily::from_json(nlohmann::json::parse(
                        R"({"vocab_size": 4, "teachers": [{"indices": [9], "probs": [0.5]}]})")),
                    Error);
}

TEST_CASE("kd curves have one point per step") {
    KdFitConfig cfg;
    cfg.steps = 25;
    cfg.m = 6;
    const auto curves = kd_fit(concentrated_family(), cfg);
    CHECK(curves.escape_mass.size() == 25);
    CHECK(curves.entropy.size() == 25);
}

TEST_CASE("ckd escape mass decreases monotonically after burn-in") {
    KdFitConfig cfg;
    cfg.m = 6;
    cfg.steps = 300;
    const auto curves = kd_fit(concentrated_family(), cfg);
    for (std::size_t s = 20; s < curves.escape_mass.size(); ++s) {
        CHECK(curves.escape_mass[s] <= curves.escape_mass[s - 1] + 1e-15);
    }
    CHECK(curves.escape_mass.back() < 0.02);
}

TEST_CASE("tail penalty never leaves more escape mass than fkl alone") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        KdFitConfig cfg;
        cfg.m = 6;
        cfg.steps = 200;
        cfg.seed = seed;
        cfg.kind = LossKind::Ckd;
        const double ckd = kd_fit(concentrated_family(), cfg).escape_mass.back();
        cfg.kind = LossKind::Fkl;
        const double fkl = kd_fit(concentrated_family(), cfg).escape_mass.back();
        CHECK(ckd <= fkl);
    }
}

TEST_CASE("initial logits depend only on the seed") {
    KdFitConfig cfg;
    cfg.steps = 1;
    cfg.step_size = 0.0;
    cfg.kind = LossKind::Fkl;
    const auto a = kd_fit(concentrated_family(), cfg);
    cfg.kind = LossKind::RklMasked;
    const auto b = kd_fit(concentrated_family(), cfg);
    CHECK(a.escape_mass == b.escape_mass);
    CHECK(a.entropy == b.entropy);
}
