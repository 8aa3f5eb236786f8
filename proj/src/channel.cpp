// SPDX-License-Identifier: Apache-2.0
#include "risgnn/channel.hpp"

#include <stdexcept>

namespace risgnn {

Eigen::MatrixXcd sample_link(const ArrayGeometry& tx_geom, const ArrayGeometry& rx_geom,
                             double r, const PathSpec& paths, const PathLossModel& pl,
                             double shadowing_xi, Rng& rng) {
    if (paths.n_paths < 1) throw std::invalid_argument("sample_link: n_paths must be >= 1");
    const double pl_db = path_loss_db(r, pl, shadowing_xi);
    const double gain = path_gain_linear(pl_db);

    const int n_rx = rx_geom.element_count();
    const int n_tx = tx_geom.element_count();
    Eigen::MatrixXcd link = Eigen::MatrixXcd::Zero(n_rx, n_tx);
    for (int l = 0; l < paths.n_paths; ++l) {
        const double scale = l == 0 ? paths.gain_scale_los : paths.gain_scale_nlos;
        // Draw order is fixed: angles first, then the complex gain.
        const double rx1 = rng.uniform(-1.0, 1.0);
        const double rx2 = rng.uniform(-1.0, 1.0);
        const double tx1 = rng.uniform(-1.0, 1.0);
        const double tx2 = rng.uniform(-1.0, 1.0);
        const std::complex<double> beta = rng.complex_normal(scale * gain);
        const Eigen::VectorXcd a_rx = steering(rx_geom, rx1, rx2);
        const Eigen::VectorXcd a_tx = steering(tx_geom, tx1, tx2);
        link.noalias() += beta * (a_rx * a_tx.adjoint());
    }
    return link;
}

ChannelRealization build_realization(const SystemConfig& cfg, Rng& rng) {
    cfg.validate();
    const int n_ris = cfg.n_ris;
    const int n_users = cfg.n_users;

    ChannelRealization real;
    real.ris_positions = cfg.ris_positions;
    real.user_positions.resize(n_users);
    for (int k = 0; k < n_users; ++k) {
        const double x = rng.uniform(cfg.user_region.x_min, cfg.user_region.x_max);
        const double y = rng.uniform(cfg.user_region.y_min, cfg.user_region.y_max);
        real.user_positions[k] = {x, y};
    }

    real.distances.resize(n_ris, n_users);
    for (int i = 0; i < n_ris; ++i)
        for (int k = 0; k < n_users; ++k)
            real.distances(i, k) = (real.user_positions[k] - cfg.ris_positions[i]).norm();

    const ArrayGeometry bs = cfg.bs_geometry();
    const ArrayGeometry ris = cfg.ris_geometry;
    const ArrayGeometry user = ArrayGeometry::ula(1);

    real.g.resize(n_ris);
    real.h.assign(n_ris, std::vector<Eigen::RowVectorXcd>(n_users));
    real.cascaded.assign(n_ris, std::vector<Eigen::MatrixXcd>(n_users));
    for (int i = 0; i < n_ris; ++i) {
        const double r_bs = (cfg.ris_positions[i] - cfg.bs_position).norm();
        const double xi_g = cfg.path_loss.sigma_xi > 0.0 ? rng.normal(0.0, cfg.path_loss.sigma_xi) : 0.0;
        real.g[i] = sample_link(bs, ris, r_bs, cfg.paths, cfg.path_loss, xi_g, rng);
        for (int k = 0; k < n_users; ++k) {
            const double xi_h =
                cfg.path_loss.sigma_xi > 0.0 ? rng.normal(0.0, cfg.path_loss.sigma_xi) : 0.0;
            // RIS transmits toward the single-antenna user: 1 x M row.
            real.h[i][k] = sample_link(ris, user, real.distances(i, k), cfg.paths, cfg.path_loss,
                                       xi_h, rng);
            real.cascaded[i][k] = real.h[i][k].transpose().asDiagonal() * real.g[i];
        }
    }
    return real;
}

}  // namespace risgnn
