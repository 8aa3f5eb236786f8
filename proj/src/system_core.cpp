// SPDX-License-Identifier: Apache-2.0
#include "risgnn/system_core.hpp"

#include <cmath>
#include <stdexcept>

namespace risgnn {

FeasibilityReport check_feasible(const Solution& sol, const SystemConfig& cfg, double tol) {
    FeasibilityReport rep;

    const double power = sol.f.squaredNorm();
    rep.power.violation = std::max(0.0, power - cfg.p_max);
    rep.power.pass = power <= cfg.p_max * (1.0 + tol);

    double max_mod_dev = 0.0;
    for (const auto& th : sol.theta)
        for (int m = 0; m < th.size(); ++m)
            max_mod_dev = std::max(max_mod_dev, std::abs(std::abs(th(m)) - 1.0));
    rep.unit_modulus.violation = max_mod_dev;
    rep.unit_modulus.pass = max_mod_dev <= tol;

    double max_row_dev = 0.0;
    double max_bin_dev = 0.0;
    for (int k = 0; k < sol.u.rows(); ++k) {
        max_row_dev = std::max(max_row_dev, std::abs(sol.u.row(k).sum() - 1.0));
        for (int i = 0; i < sol.u.cols(); ++i) {
            const double v = sol.u(k, i);
            max_bin_dev = std::max(max_bin_dev, std::min(std::abs(v), std::abs(v - 1.0)));
        }
    }
    rep.row_sum.violation = max_row_dev;
    rep.row_sum.pass = max_row_dev <= tol;
    rep.binary.violation = max_bin_dev;
    rep.binary.pass = max_bin_dev <= tol;
    return rep;
}

Eigen::RowVectorXcd effective_channel(const ChannelRealization& real, const Solution& sol, int k) {
    const int n_ris = real.n_ris();
    if (sol.n_ris() != n_ris || k < 0 || k >= real.n_users() || sol.u.cols() != n_ris)
        throw std::invalid_argument("effective_channel: shape mismatch");
    const int n_t = static_cast<int>(real.g[0].cols());
    Eigen::RowVectorXcd h = Eigen::RowVectorXcd::Zero(n_t);
    for (int i = 0; i < n_ris; ++i) {
        if (sol.theta[i].size() != real.cascaded[i][k].rows())
            throw std::invalid_argument("effective_channel: theta length mismatch");
        h += sol.u(k, i) * (sol.theta[i] * real.cascaded[i][k]);
    }
    return h;
}

double sinr(const ChannelRealization& real, const Solution& sol, int k, double noise_power) {
    const Eigen::RowVectorXcd h = effective_channel(real, sol, k);
    const int n_users = static_cast<int>(sol.f.cols());
    double signal = 0.0;
    double interference = 0.0;
    for (int j = 0; j < n_users; ++j) {
        const double p = std::norm((h * sol.f.col(j))(0));
        if (j == k)
            signal = p;
        else
            interference += p;
    }
    return signal / (interference + noise_power);
}

double weighted_sum_rate(const ChannelRealization& real, const Solution& sol,
                         const SystemConfig& cfg) {
    double wsr = 0.0;
    for (int k = 0; k < cfg.n_users; ++k)
        wsr += cfg.weights[k] * std::log2(1.0 + sinr(real, sol, k, cfg.noise_power));
    return wsr;
}

}  // namespace risgnn
