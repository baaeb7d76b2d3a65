#include "star/error.hpp"
#include "star/grpo.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace star;

namespace {

Rollout single(double logp_new, double logp_old, double reward = 0.0, double logp_ref = -1.0) {
    return Rollout{{TokenLogProbs{logp_new, logp_old, logp_ref}}, reward};
}

RolloutGroup random_group(std::mt19937_64& rng, std::size_t g) {
    std::uniform_real_distribution<double> lp(-3.0, -0.01);
    std::uniform_int_distribution<int> len(1, 5), rew(0, 4);
    RolloutGroup group{"p", {}};
    for (std::size_t i = 0; i < g; ++i) {
        Rollout r;
        for (int t = 0, n = len(rng); t < n; ++t) r.tokens.push_back({lp(rng), lp(rng), lp(rng)});
        r.reward = rew(rng) / 4.0;
        group.rollouts.push_back(r);
    }
    return group;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error");
    return ErrorCode::Io;
}

} // namespace

TEST_CASE("advantages: closed form") {
    const std::vector<double> r{1, 0, 0, 1};
    CHECK(standardize_advantages(r) == std::vector<double>{1, -1, -1, 1});
}

TEST_CASE("advantages: errors") {
    const std::vector<double> flat{0.3, 0.3, 0.3};
    CHECK(code_of([&] { standardize_advantages(flat); }) == ErrorCode::ZeroVariance);
    const std::vector<double> one{1.0};
    CHECK(code_of([&] { standardize_advantages(one); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("property: advantages are standardized and shift invariant") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> r(2 + rng() % 10);
        for (double& v : r) v = u(rng);
        const auto a = standardize_advantages(r);
        const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
        double var = 0.0;
        for (double v : a) var += (v - mean) * (v - mean);
        CHECK(std::fabs(mean) <= 1e-9);
        CHECK(std::fabs(std::sqrt(var / a.size()) - 1.0) <= 1e-9);

        const double delta = u(rng);
        auto shifted = r;
        for (double& v : shifted) v += delta;
        const auto b = standardize_advantages(shifted);
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-9));
    }
}

TEST_CASE("homogeneous filtering") {
    RolloutGroup perfect{"a", {single(-1, -1, 1), single(-1, -1, 1)}};
    RolloutGroup mixed{"b", {single(-1, -1, 1), single(-1, -1, 0)}};
    RolloutGroup wrong{"c", {single(-1, -1, -1), single(-1, -1, -1)}};
    const auto out = filter_homogeneous({perfect, mixed, wrong, mixed});
    REQUIRE(out.size() == 2);
    CHECK(out[0].prompt_id == "b");
    CHECK(out[0].rollouts[1].tokens[0].logp_new == mixed.rollouts[1].tokens[0].logp_new);
    CHECK(filter_homogeneous({}).empty());
    CHECK(is_homogeneous(perfect.rewards()));
    CHECK_FALSE(is_homogeneous(mixed.rewards()));
}

TEST_CASE("k2 estimator") {
    CHECK(kl_k2(-0.7, -0.7) == 0.0);
    CHECK(kl_k2(-1.0, -2.0) == 0.5);
    CHECK(kl_k2(-2.0, -1.0) == 0.5);
}

TEST_CASE("clipped surrogate examples") {
    const GrpoConfig cfg{0.2, 0.0, true};
    const double lr2 = std::log(2.0);
    RolloutGroup g{"x", {single(-1.0 + lr2, -1.0)}};
    const std::vector<double> pos{1.0}, neg{-1.0};
    CHECK(grpo_objective(g, pos, cfg).value == doctest::Approx(1.2).epsilon(1e-14));
    CHECK(grpo_objective(g, pos, cfg).per_token[0][0].clipped);
    CHECK(grpo_objective(g, neg, cfg).value == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK_FALSE(grpo_objective(g, neg, cfg).per_token[0][0].clipped);
}

TEST_CASE("on-policy objective is the mean advantage") {
    RolloutGroup g{"x", {single(-1, -1), Rollout{{{-0.5, -0.5, -0.1}, {-2, -2, -1}}, 0}, single(-0.3, -0.3)}};
    const std::vector<double> adv{0.5, -1.0, 1.0};
    const GrpoConfig cfg{0.2, 0.0, true};
    CHECK(grpo_objective(g, adv, cfg).value == doctest::Approx(0.5 / 3.0).epsilon(1e-15));
}

TEST_CASE("objective errors") {
    RolloutGroup g{"x", {single(-1, -1), single(-1, -1)}};
    const std::vector<double> one{1.0};
    CHECK(code_of([&] { grpo_objective(g, one, GrpoConfig{}); }) == ErrorCode::LengthMismatch);
    RolloutGroup empty{"x", {Rollout{}, single(-1, -1)}};
    const std::vector<double> two{1.0, -1.0};
    CHECK(code_of([&] { grpo_objective(empty, two, GrpoConfig{}); }) == ErrorCode::InvalidArgument);
    RolloutGroup positive{"x", {single(0.5, -1), single(-1, -1)}};
    CHECK(code_of([&] { grpo_objective(positive, two, GrpoConfig{}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("property: rollout order does not matter") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 500; ++i) {
        auto g = random_group(rng, 2 + rng() % 6);
        std::vector<double> adv(g.rollouts.size());
        for (double& a : adv) a = std::uniform_real_distribution<double>(-2, 2)(rng);
        const double base = grpo_objective(g, adv, GrpoConfig{}).value;
        std::vector<std::size_t> perm(adv.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        RolloutGroup h{"p", {}};
        std::vector<double> adv2;
        for (auto p : perm) {
            h.rollouts.push_back(g.rollouts[p]);
            adv2.push_back(adv[p]);
        }
        CHECK(grpo_objective(h, adv2, GrpoConfig{}).value == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("property: without clipping single-token objective is importance weighted") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> lp(-3.0, -0.01), a(-2, 2);
    for (int i = 0; i < 500; ++i) {
        RolloutGroup g{"p", {}};
        std::vector<double> adv;
        double expected = 0.0;
        for (int j = 0; j < 4; ++j) {
            const double n = lp(rng), o = lp(rng);
            g.rollouts.push_back(single(n, o));
            adv.push_back(a(rng));
            expected += std::exp(n - o) * adv.back() / 4.0;
        }
        const GrpoConfig cfg{1e9, 0.0, true};
        CHECK(grpo_objective(g, adv, cfg).value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("objective gradient matches central differences") {
    std::mt19937_64 rng(17);
    const GrpoConfig cfg{0.2, 0.05, true};
    for (int i = 0; i < 200; ++i) {
        auto g = random_group(rng, 4);
        std::vector<double> adv{1.0, -0.5, 0.3, -0.8};
        const auto grad = grpo_objective_grad(g, adv, cfg);
        for (std::size_t r = 0; r < g.rollouts.size(); ++r) {
            for (std::size_t t = 0; t < g.rollouts[r].tokens.size(); ++t) {
                auto& x = g.rollouts[r].tokens[t].logp_new;
                const double orig = x;
                const double ratio = std::exp(orig - g.rollouts[r].tokens[t].logp_old);
                if (std::fabs(ratio - 0.8) < 1e-4 || std::fabs(ratio - 1.2) < 1e-4 || orig > -1e-4) continue;
                x = orig + 1e-6;
                const double up = grpo_objective(g, adv, cfg).value;
                x = orig - 1e-6;
                const double down = grpo_objective(g, adv, cfg).value;
                x = orig;
                CHECK(grad[r][t] == doctest::Approx((up - down) / 2e-6).epsilon(1e-5).scale(1.0));
            }
        }
    }
}
