#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gkps/link_sim.hpp"
#include "gkps/rng.hpp"

using namespace gkps;
using Catch::Approx;

TEST_CASE("bsm outcome invariants", "[link_sim]") {
    NoiseParams params;
    auto rng = make_stream(5, {kStreamLinkSim, 1});
    for (int i = 0; i < 500; ++i) {
        const auto o = simulate_bsm(2.0, params, rng);
        REQUIRE(o.p0 >= -kSqrtPi / 2.0);
        REQUIRE(o.p0 < kSqrtPi / 2.0);
        REQUIRE(o.qx_outer >= 0.0);
        REQUIRE(o.qx_outer <= 0.5);
        REQUIRE(o.qz_outer >= 0.0);
        REQUIRE(o.qz_outer <= 0.5);
        REQUIRE(o.p_no_error == Approx((1.0 - o.qx_outer) * (1.0 - o.qz_outer)).epsilon(1e-15));
    }
}

TEST_CASE("bsm variance composition", "[link_sim]") {
    NoiseParams params;
    const double expect = 2.0 * params.sigma2_prep + 2.0 * channel_variance(1.0, params);
    REQUIRE(bsm_total_variance(2.0, params) == Approx(expect).epsilon(1e-15));
}

TEST_CASE("near-noiseless links almost never fail", "[link_sim]") {
    NoiseParams params;
    params.sigma2_prep = 1e-4;
    auto rng = make_stream(6, {kStreamLinkSim, 2});
    double sum = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) sum += simulate_bsm(0.1, params, rng).p_no_error;
    REQUIRE(sum / n > 0.999);
}

TEST_CASE("ranking is descending and stable", "[link_sim]") {
    std::vector<BsmOutcome> v(4);
    v[0].p_no_error = 0.5;
    v[0].qx_outer = 0.11;  // marker
    v[1].p_no_error = 0.9;
    v[2].p_no_error = 0.5;
    v[2].qx_outer = 0.22;  // same score, later index
    v[3].p_no_error = 0.7;
    rank_outcomes(v);
    REQUIRE(v[0].p_no_error == 0.9);
    REQUIRE(v[1].p_no_error == 0.7);
    REQUIRE(v[2].qx_outer == 0.11);
    REQUIRE(v[3].qx_outer == 0.22);
}

TEST_CASE("rounds come back ranked", "[link_sim]") {
    NoiseParams params;
    auto rng = make_stream(8, {kStreamLinkSim, 3});
    const auto round = simulate_round(1.0, 6, params, rng);
    REQUIRE(round.size() == 6);
    for (std::size_t j = 1; j < round.size(); ++j)
        REQUIRE(round[j - 1].p_no_error >= round[j].p_no_error);
}

TEST_CASE("family profiles are deterministic", "[link_sim]") {
    NoiseParams params;
    RankedFamily a(1.0, 3, params, 1500, 42);
    RankedFamily b(1.0, 3, params, 1500, 42);
    REQUIRE(a.profile(3).q_outer_x == b.profile(3).q_outer_x);
    REQUIRE(a.profile(3).p_no_error_mean == b.profile(3).p_no_error_mean);
    RankedFamily c(1.0, 3, params, 1500, 43);
    REQUIRE(a.profile(3).q_outer_x != c.profile(3).q_outer_x);
    RankedFamily d(1.0, 3, params, 1500, 42, /*lane=*/1);
    REQUIRE(a.profile(3).q_outer_x != d.profile(3).q_outer_x);
}

TEST_CASE("profiles do not depend on pool size", "[link_sim]") {
    // the k=3 profile from a k_max=6 pool is bit-identical to a k_max=3 pool
    NoiseParams params;
    RankedFamily big(1.0, 6, params, 1200, 9);
    RankedFamily small(1.0, 3, params, 1200, 9);
    for (int k = 1; k <= 3; ++k) {
        REQUIRE(big.profile(k).q_outer_x == small.profile(k).q_outer_x);
        REQUIRE(big.profile(k).q_outer_z == small.profile(k).q_outer_z);
        REQUIRE(big.profile(k).p_no_error_mean == small.profile(k).p_no_error_mean);
    }
}

TEST_CASE("rank means are ordered and bounded", "[link_sim]") {
    NoiseParams params;
    RankedFamily fam(2.0, 8, params, 2000, 4);
    const auto p = fam.profile(8);
    for (int j = 0; j < 8; ++j) {
        REQUIRE(p.q_outer_x[j] >= 0.0);
        REQUIRE(p.q_outer_x[j] <= 0.5);
        REQUIRE(p.q_outer_z[j] >= 0.0);
        REQUIRE(p.q_outer_z[j] <= 0.5);
        if (j > 0) REQUIRE(p.p_no_error_mean[j - 1] >= p.p_no_error_mean[j]);
    }
    // selecting the best of 8 beats the best of 1
    REQUIRE(fam.profile(8).p_no_error_mean[0] > fam.profile(1).p_no_error_mean[0]);
}

TEST_CASE("pooled family matches the direct estimator", "[link_sim]") {
    NoiseParams params;
    RankedFamily fam(1.0, 4, params, 4000, 12);
    auto rng = make_stream(77, {kStreamLinkSim, 50});
    const auto direct = estimate_ranked_profile(1.0, 4, params, 4000, rng);
    const auto pooled = fam.profile(4);
    for (int j = 0; j < 4; ++j) {
        REQUIRE(pooled.q_outer_x[j] == Approx(direct.q_outer_x[j]).margin(0.012));
        REQUIRE(pooled.p_no_error_mean[j] == Approx(direct.p_no_error_mean[j]).margin(0.012));
    }
}

TEST_CASE("link sim input validation", "[link_sim]") {
    NoiseParams params;
    auto rng = make_stream(1, {kStreamLinkSim, 0});
    REQUIRE_THROWS_AS(simulate_bsm(0.0, params, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(RankedFamily(1.0, 3, params, 10, 1), config_error);
    RankedFamily fam(1.0, 3, params, 1000, 1);
    REQUIRE_THROWS_AS(fam.profile(4), std::invalid_argument);
    REQUIRE_THROWS_AS(estimate_ranked_profile(1.0, 3, params, 10, rng), config_error);
}
