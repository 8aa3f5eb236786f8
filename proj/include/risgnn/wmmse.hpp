// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "risgnn/channel.hpp"
#include "risgnn/rng.hpp"
#include "risgnn/system_config.hpp"
#include "risgnn/system_core.hpp"

namespace risgnn {

struct WmmseConfig {
    int max_iters = 200;
    // Relative weighted-sum-rate improvement below which iteration stops.
    double tol = 1e-8;
};

struct WmmseResult {
    Solution solution;
    std::vector<double> wsr_trajectory;  // value after each outer iteration
    int iterations = 0;
};

// Alternating MMSE beamformer design for fixed phases and association.
// theta and u are copied into the returned solution unchanged; only f is
// optimized. The weighted sum rate is non-decreasing across iterations.
WmmseResult wmmse_beamforming(const ChannelRealization& real, const SystemConfig& cfg,
                              const std::vector<Eigen::RowVectorXcd>& theta,
                              const Eigen::MatrixXd& u, const WmmseConfig& wcfg = {});

// Uniformly random unit-modulus phases for every reflector.
std::vector<Eigen::RowVectorXcd> random_phases(int n_ris, int m, Rng& rng);

// Each user attaches to its nearest reflector by link distance; ties go to
// the lowest index.
Eigen::MatrixXd nearest_association(const ChannelRealization& real);

// Random-phase benchmark: random theta, nearest association, WMMSE beams.
WmmseResult random_phase_solution(const ChannelRealization& real, const SystemConfig& cfg,
                                  Rng& rng, const WmmseConfig& wcfg = {});

}  // namespace risgnn
