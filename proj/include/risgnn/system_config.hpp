// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "risgnn/geometry.hpp"
#include "risgnn/path_loss.hpp"

namespace risgnn {

// Axis-aligned service rectangle, meters.
struct Region {
    double x_min = 40.0, x_max = 50.0;
    double y_min = -25.0, y_max = 25.0;
};

// Sparse-path count and relative per-path gain scales. n_paths = 1 LoS plus
// (n_paths - 1) NLoS paths; NLoS variance is attenuated by gain_scale_nlos.
struct PathSpec {
    int n_paths = 3;
    double gain_scale_los = 1.0;
    double gain_scale_nlos = 0.1;
};

// Full scenario description. Internal units are watts and meters; dBm only
// appears at the config-file boundary.
struct SystemConfig {
    int n_t = 8;  // BS antennas (ULA)
    int n_users = 2;
    int n_ris = 2;
    ArrayGeometry ris_geometry = ArrayGeometry::upa(4, 4);
    double bs_spacing_over_wavelength = 0.5;

    double p_max = 1.0;             // 30 dBm
    double noise_power = 3.1622776601683794e-12;  // -85 dBm

    std::vector<double> weights = {0.5, 0.5};

    Eigen::Vector2d bs_position = {0.0, 0.0};
    std::vector<Eigen::Vector2d> ris_positions = {{30.0, 25.0}, {30.0, -25.0}};
    Region user_region;

    PathLossModel path_loss;
    PathSpec paths;

    ArrayGeometry bs_geometry() const { return ArrayGeometry::ula(n_t, bs_spacing_over_wavelength); }
    int ris_elements() const { return ris_geometry.element_count(); }

    // Throws std::invalid_argument on an inconsistent scenario.
    void validate() const;
};

// Amplitude scale 10^(PL_ref/20) that maps raw cascaded-channel entries to
// O(1) features. PL_ref is the mean over RISs of the two-hop path loss
// through the RIS to the center of the user region (no shadowing).
double feature_scale(const SystemConfig& cfg);

// JSON round trip. Parsing applies full defaulting: absent keys keep the
// paper-scenario defaults above.
std::string to_json(const SystemConfig& cfg);
SystemConfig system_config_from_json(const std::string& text);
SystemConfig load_system_config(const std::string& path);
void save_system_config(const SystemConfig& cfg, const std::string& path);

}  // namespace risgnn
