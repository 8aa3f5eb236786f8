// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "risgnn/rng.hpp"
#include "risgnn/system_config.hpp"

namespace risgnn {

// One sampled scene: every BS->RIS and RIS->user link plus the cascaded
// products diag(h_ik) * G_i the graph network consumes.
struct ChannelRealization {
    // g[i]: BS->RIS_i, (M x N_t).
    std::vector<Eigen::MatrixXcd> g;
    // h[i][k]: RIS_i->user_k, row vector (1 x M).
    std::vector<std::vector<Eigen::RowVectorXcd>> h;
    // cascaded[i][k] = diag(h[i][k]) * g[i], (M x N_t).
    std::vector<std::vector<Eigen::MatrixXcd>> cascaded;

    std::vector<Eigen::Vector2d> user_positions;  // K points, meters
    std::vector<Eigen::Vector2d> ris_positions;   // R points, meters
    Eigen::MatrixXd distances;                    // R x K, RIS_i to user_k, meters

    int n_ris() const { return static_cast<int>(g.size()); }
    int n_users() const { return g.empty() ? 0 : static_cast<int>(h[0].size()); }
};

// Sum over n_paths of beta_l * a_rx * a_tx^H, with the per-path gain
// beta_l ~ CN(0, scale_l * 10^(-0.1 PL(r))). The first path is LoS; the
// remaining ones carry the NLoS gain scale. Direction parameters are drawn
// uniform on [-1, 1] in normalized sine-angle space. Deterministic in `rng`.
Eigen::MatrixXcd sample_link(const ArrayGeometry& tx_geom, const ArrayGeometry& rx_geom,
                             double r, const PathSpec& paths, const PathLossModel& pl,
                             double shadowing_xi, Rng& rng);

// Samples user positions, all links, and all cascaded channels for one scene.
ChannelRealization build_realization(const SystemConfig& cfg, Rng& rng);

}  // namespace risgnn
