// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "risgnn/channel.hpp"
#include "risgnn/system_config.hpp"

namespace risgnn {

// Candidate (F, {theta_i}, U) triple. U rows may be soft (row-stochastic
// mixture weights) or hard one-hot; both evaluate through the same formulas.
struct Solution {
    Eigen::MatrixXcd f;                    // N_t x K active beamformer
    std::vector<Eigen::RowVectorXcd> theta;  // R rows of length M
    Eigen::MatrixXd u;                     // K x R association

    int n_users() const { return static_cast<int>(f.cols()); }
    int n_ris() const { return static_cast<int>(theta.size()); }
};

// Per-constraint pass/fail with the violating magnitude.
struct FeasibilityReport {
    struct Entry {
        bool pass = true;
        double violation = 0.0;  // how far past the constraint, in its own units
    };
    Entry power;         // ||F||_F^2 <= p_max
    Entry unit_modulus;  // | |theta_im| - 1 | <= tol
    Entry row_sum;       // | sum_i u_ki - 1 | <= tol
    Entry binary;        // u_ki in {0, 1} within tol

    bool all_pass() const { return power.pass && unit_modulus.pass && row_sum.pass && binary.pass; }
    bool relaxed_pass() const { return power.pass && unit_modulus.pass && row_sum.pass; }
};

FeasibilityReport check_feasible(const Solution& sol, const SystemConfig& cfg, double tol = 1e-9);

// Mixture channel sum_i U(k,i) * theta_i * cascaded[i][k], a 1 x N_t row.
Eigen::RowVectorXcd effective_channel(const ChannelRealization& real, const Solution& sol, int k);

// |h_k f_k|^2 / (sum_{j != k} |h_k f_j|^2 + sigma^2).
double sinr(const ChannelRealization& real, const Solution& sol, int k, double noise_power);

// sum_k w_k log2(1 + SINR_k), bits/s/Hz.
double weighted_sum_rate(const ChannelRealization& real, const Solution& sol,
                         const SystemConfig& cfg);

}  // namespace risgnn
