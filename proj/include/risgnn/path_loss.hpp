// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>

namespace risgnn {

// Log-distance path loss PL(r) = rho_a + 10 * rho_b * log10(r) + xi, in dB,
// with xi a lognormal shadowing draw (std dev sigma_xi, in dB).
struct PathLossModel {
    double rho_a = 61.4;
    double rho_b = 2.0;
    double sigma_xi = 5.8;
};

inline double path_loss_db(double r, const PathLossModel& model, double xi = 0.0) {
    if (!(r > 0.0)) throw std::invalid_argument("path_loss_db: distance must be positive");
    return model.rho_a + 10.0 * model.rho_b * std::log10(r) + xi;
}

// Linear power gain corresponding to a path loss in dB.
inline double path_gain_linear(double pl_db) { return std::pow(10.0, -0.1 * pl_db); }

inline double dbm_to_watts(double dbm) { return std::pow(10.0, 0.1 * (dbm - 30.0)); }

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

}  // namespace risgnn
