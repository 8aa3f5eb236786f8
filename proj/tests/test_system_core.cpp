// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <complex>

#include "risgnn/system_core.hpp"
#include "test_helpers.hpp"

using risgnn::ChannelRealization;
using risgnn::Rng;
using risgnn::Solution;
using risgnn::SystemConfig;

namespace {

// Index-loop mixture channel: sum over reflectors and elements, no linear
// algebra shortcuts.
Eigen::RowVectorXcd oracle_effective_channel(const ChannelRealization& real, const Solution& sol,
                                             int k) {
    const int n_t = static_cast<int>(real.g[0].cols());
    const int m = static_cast<int>(real.g[0].rows());
    Eigen::RowVectorXcd h = Eigen::RowVectorXcd::Zero(n_t);
    for (int i = 0; i < real.n_ris(); ++i)
        for (int t = 0; t < n_t; ++t)
            for (int e = 0; e < m; ++e)
                h(t) += sol.u(k, i) * sol.theta[i](e) * real.cascaded[i][k](e, t);
    return h;
}

double oracle_sinr(const ChannelRealization& real, const Solution& sol, int k,
                   double noise_power) {
    const Eigen::RowVectorXcd h = oracle_effective_channel(real, sol, k);
    double sig = 0.0, intf = 0.0;
    for (int j = 0; j < sol.n_users(); ++j) {
        std::complex<double> dot = 0.0;
        for (int t = 0; t < h.size(); ++t) dot += h(t) * sol.f(t, j);
        if (j == k)
            sig = std::norm(dot);
        else
            intf += std::norm(dot);
    }
    return sig / (intf + noise_power);
}

}  // namespace

TEST_CASE("effective channel matches the element-loop oracle") {
    Rng rng(100);
    for (int t = 0; t < 50; ++t) {
        const int r = 1 + static_cast<int>(rng.uniform() * 3);
        const int k = 1 + static_cast<int>(rng.uniform() * 3);
        const int m = 1 + static_cast<int>(rng.uniform() * 4);
        const int n_t = 1 + static_cast<int>(rng.uniform() * 4);
        const ChannelRealization real = testutil::make_instance(rng, r, k, m, n_t);
        const Solution sol = testutil::make_solution(rng, r, k, m, n_t, 1.0, t % 2 == 0);
        for (int u = 0; u < k; ++u) {
            const Eigen::RowVectorXcd got = risgnn::effective_channel(real, sol, u);
            const Eigen::RowVectorXcd want = oracle_effective_channel(real, sol, u);
            CHECK((got - want).norm() <= 1e-12 * std::max(1.0, want.norm()));
        }
    }
}

TEST_CASE("SINR matches the direct-formula oracle") {
    Rng rng(200);
    for (int t = 0; t < 50; ++t) {
        const ChannelRealization real = testutil::make_instance(rng, 2, 2, 3, 4);
        const Solution sol = testutil::make_solution(rng, 2, 2, 3, 4);
        const double noise = 0.05 + rng.uniform();
        for (int u = 0; u < 2; ++u) {
            const double got = risgnn::sinr(real, sol, u, noise);
            const double want = oracle_sinr(real, sol, u, noise);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("weighted sum rate accumulates per-user log terms") {
    Rng rng(300);
    for (int t = 0; t < 20; ++t) {
        const int k = 2 + t % 2;
        const SystemConfig cfg = testutil::make_config(2, k, 4, 4, 2.0, 0.3);
        const ChannelRealization real = testutil::make_instance(rng, 2, k, 4, 4);
        const Solution sol = testutil::make_solution(rng, 2, k, 4, 4, cfg.p_max);
        double want = 0.0;
        for (int u = 0; u < k; ++u)
            want += cfg.weights[static_cast<std::size_t>(u)] *
                    std::log2(1.0 + oracle_sinr(real, sol, u, cfg.noise_power));
        CHECK(risgnn::weighted_sum_rate(real, sol, cfg) ==
              doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("SINR is invariant to a common unit-modulus rotation of F") {
    Rng rng(400);
    const ChannelRealization real = testutil::make_instance(rng, 2, 2, 4, 4);
    Solution sol = testutil::make_solution(rng, 2, 2, 4, 4);
    const double base0 = risgnn::sinr(real, sol, 0, 0.2);
    const double base1 = risgnn::sinr(real, sol, 1, 0.2);
    sol.f *= std::polar(1.0, 1.234);
    CHECK(std::abs(risgnn::sinr(real, sol, 0, 0.2) - base0) < 1e-10 * std::max(1.0, base0));
    CHECK(std::abs(risgnn::sinr(real, sol, 1, 0.2) - base1) < 1e-10 * std::max(1.0, base1));
}

TEST_CASE("doubling noise with F scaled by sqrt(2) leaves SINR unchanged") {
    Rng rng(500);
    const ChannelRealization real = testutil::make_instance(rng, 2, 2, 4, 4);
    Solution sol = testutil::make_solution(rng, 2, 2, 4, 4);
    const double noise = 0.37;
    const double base0 = risgnn::sinr(real, sol, 0, noise);
    const double base1 = risgnn::sinr(real, sol, 1, noise);
    sol.f *= std::sqrt(2.0);
    CHECK(std::abs(risgnn::sinr(real, sol, 0, 2.0 * noise) - base0) <
          1e-10 * std::max(1.0, base0));
    CHECK(std::abs(risgnn::sinr(real, sol, 1, 2.0 * noise) - base1) <
          1e-10 * std::max(1.0, base1));
}

TEST_CASE("feasibility report flags each constraint separately") {
    Rng rng(600);
    const SystemConfig cfg = testutil::make_config(2, 2, 4, 4, 1.0, 0.1);
    Solution sol = testutil::make_solution(rng, 2, 2, 4, 4, cfg.p_max);

    CHECK(risgnn::check_feasible(sol, cfg).all_pass());

    SUBCASE("power overshoot") {
        sol.f *= 1.1;
        const auto rep = risgnn::check_feasible(sol, cfg);
        CHECK_FALSE(rep.power.pass);
        CHECK(rep.power.violation > 0.0);
        CHECK(rep.unit_modulus.pass);
    }
    SUBCASE("non-unit phase") {
        sol.theta[1](2) *= 1.5;
        const auto rep = risgnn::check_feasible(sol, cfg);
        CHECK(rep.power.pass);
        CHECK_FALSE(rep.unit_modulus.pass);
    }
    SUBCASE("broken row sum") {
        sol.u(0, 0) = 0.7;
        sol.u(0, 1) = 0.7;
        const auto rep = risgnn::check_feasible(sol, cfg);
        CHECK_FALSE(rep.row_sum.pass);
    }
    SUBCASE("soft rows pass relaxed, fail binary") {
        sol.u(0, 0) = 0.5;
        sol.u(0, 1) = 0.5;
        const auto rep = risgnn::check_feasible(sol, cfg);
        CHECK(rep.row_sum.pass);
        CHECK_FALSE(rep.binary.pass);
        CHECK(rep.relaxed_pass());
        CHECK_FALSE(rep.all_pass());
    }
}

TEST_CASE("zero beamformer yields zero rate") {
    Rng rng(700);
    const SystemConfig cfg = testutil::make_config(2, 2, 4, 4, 1.0, 0.1);
    const ChannelRealization real = testutil::make_instance(rng, 2, 2, 4, 4);
    Solution sol = testutil::make_solution(rng, 2, 2, 4, 4);
    sol.f.setZero();
    CHECK(risgnn::weighted_sum_rate(real, sol, cfg) == 0.0);
}
