// SPDX-License-Identifier: Apache-2.0
#include "risgnn/wmmse.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "risgnn/errors.hpp"

namespace risgnn {

namespace {

// Beamformer for fixed receive scalars and MSE weights: solves the regularized
// normal equations and picks the multiplier mu so the power constraint holds.
Eigen::MatrixXcd beamformer_update(const std::vector<Eigen::RowVectorXcd>& h,
                                   const std::vector<std::complex<double>>& u,
                                   const std::vector<double>& w_mse, double p_max) {
    const int n_users = static_cast<int>(h.size());
    const Eigen::Index n_t = h[0].cols();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n_t, n_t);
    for (int j = 0; j < n_users; ++j)
        a.noalias() += (w_mse[j] * std::norm(u[j])) * (h[j].adjoint() * h[j]);

    auto solve = [&](double mu) {
        Eigen::MatrixXcd reg = a + mu * Eigen::MatrixXcd::Identity(n_t, n_t);
        Eigen::LDLT<Eigen::MatrixXcd> ldlt(reg);
        Eigen::MatrixXcd f(n_t, n_users);
        for (int k = 0; k < n_users; ++k)
            f.col(k) = ldlt.solve(h[k].adjoint()) * (w_mse[k] * std::conj(u[k]));
        return f;
    };

    // mu = 0 is optimal whenever it already satisfies the power budget; the
    // ridge term added below keeps the unconstrained solve well posed.
    const double ridge = 1e-12 * std::max(1.0, a.diagonal().real().maxCoeff());
    Eigen::MatrixXcd f = solve(ridge);
    double power = f.squaredNorm();
    if (power <= p_max) return f;

    double lo = 0.0, hi = std::max(ridge, 1.0);
    while (solve(hi).squaredNorm() > p_max) {
        hi *= 2.0;
        if (hi > 1e30) throw NumericError("wmmse: power multiplier search diverged");
    }
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (solve(mid).squaredNorm() > p_max)
            lo = mid;
        else
            hi = mid;
    }
    return solve(hi);
}

}  // namespace

WmmseResult wmmse_beamforming(const ChannelRealization& real, const SystemConfig& cfg,
                              const std::vector<Eigen::RowVectorXcd>& theta,
                              const Eigen::MatrixXd& u, const WmmseConfig& wcfg) {
    cfg.validate();
    if (wcfg.max_iters < 1) throw std::invalid_argument("wmmse: max_iters must be positive");
    if (!(wcfg.tol >= 0.0)) throw std::invalid_argument("wmmse: tol must be non-negative");
    const int n_users = cfg.n_users;
    const int n_t = cfg.n_t;

    Solution sol;
    sol.theta = theta;
    sol.u = u;
    sol.f = Eigen::MatrixXcd::Zero(n_t, n_users);

    // Effective per-user channels for the fixed theta and association, then a
    // common rescale so the inner solves stay well conditioned.
    std::vector<Eigen::RowVectorXcd> h_eff(n_users);
    double ssq = 0.0;
    for (int k = 0; k < n_users; ++k) {
        h_eff[k] = effective_channel(real, sol, k);
        ssq += h_eff[k].squaredNorm();
    }
    const double s = std::sqrt(ssq / n_users);
    if (!(s > 0.0)) throw NumericError("wmmse: all effective channels are zero");
    std::vector<Eigen::RowVectorXcd> h(n_users);
    for (int k = 0; k < n_users; ++k) h[k] = h_eff[k] / s;
    const double noise = cfg.noise_power / (s * s);

    // Matched-filter start at full power, split evenly across users.
    Eigen::MatrixXcd f(n_t, n_users);
    for (int k = 0; k < n_users; ++k) {
        const double nrm = h[k].norm();
        if (nrm > 0.0)
            f.col(k) = h[k].adjoint() / nrm * std::sqrt(cfg.p_max / n_users);
        else
            f.col(k) = Eigen::VectorXcd::Constant(n_t, std::sqrt(cfg.p_max / n_users / n_t));
    }

    auto wsr_of = [&](const Eigen::MatrixXcd& fm) {
        double total = 0.0;
        for (int k = 0; k < n_users; ++k) {
            double sig = 0.0, intf = 0.0;
            for (int j = 0; j < n_users; ++j) {
                const double pw = std::norm((h[k] * fm.col(j))(0));
                if (j == k)
                    sig = pw;
                else
                    intf += pw;
            }
            total += cfg.weights[k] * std::log2(1.0 + sig / (intf + noise));
        }
        return total;
    };

    WmmseResult result;
    double prev = wsr_of(f);
    std::vector<std::complex<double>> rx(n_users);
    std::vector<double> w_mse(n_users);
    for (int it = 0; it < wcfg.max_iters; ++it) {
        for (int k = 0; k < n_users; ++k) {
            std::complex<double> sig = (h[k] * f.col(k))(0);
            double total = noise;
            for (int j = 0; j < n_users; ++j) total += std::norm((h[k] * f.col(j))(0));
            rx[k] = sig / total;
            double e = 1.0;
            e += std::norm(rx[k]) * total;
            e -= 2.0 * std::real(std::conj(rx[k]) * sig);
            e = std::max(e, 1e-300);
            w_mse[k] = cfg.weights[k] / e;
        }
        f = beamformer_update(h, rx, w_mse, cfg.p_max);
        const double now = wsr_of(f);
        result.wsr_trajectory.push_back(now);
        result.iterations = it + 1;
        if (now - prev <= wcfg.tol * std::max(1.0, std::abs(prev)) && it > 0) {
            prev = now;
            break;
        }
        prev = now;
    }
    sol.f = f;
    result.solution = std::move(sol);
    return result;
}

std::vector<Eigen::RowVectorXcd> random_phases(int n_ris, int m, Rng& rng) {
    if (n_ris < 1 || m < 1) throw std::invalid_argument("random_phases: dimensions must be positive");
    std::vector<Eigen::RowVectorXcd> theta(n_ris);
    for (int i = 0; i < n_ris; ++i) {
        theta[i].resize(m);
        for (int e = 0; e < m; ++e)
            theta[i](e) = std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
    }
    return theta;
}

Eigen::MatrixXd nearest_association(const ChannelRealization& real) {
    const int n_ris = real.n_ris();
    const int n_users = real.n_users();
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n_users, n_ris);
    for (int k = 0; k < n_users; ++k) {
        int best = 0;
        for (int i = 1; i < n_ris; ++i)
            if (real.distances(i, k) < real.distances(best, k)) best = i;
        u(k, best) = 1.0;
    }
    return u;
}

WmmseResult random_phase_solution(const ChannelRealization& real, const SystemConfig& cfg,
                                  Rng& rng, const WmmseConfig& wcfg) {
    auto theta = random_phases(cfg.n_ris, cfg.ris_elements(), rng);
    return wmmse_beamforming(real, cfg, theta, nearest_association(real), wcfg);
}

}  // namespace risgnn
