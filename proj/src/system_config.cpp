// SPDX-License-Identifier: Apache-2.0
#include "risgnn/system_config.hpp"

#include "risgnn/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace risgnn {

using nlohmann::json;

void SystemConfig::validate() const {
    if (n_t < 1) throw std::invalid_argument("config: n_t must be positive");
    if (n_users < 1) throw std::invalid_argument("config: n_users must be positive");
    if (n_ris < 1) throw std::invalid_argument("config: n_ris must be positive");
    if (!(p_max > 0.0)) throw std::invalid_argument("config: p_max must be positive");
    if (!(noise_power > 0.0)) throw std::invalid_argument("config: noise_power must be positive");
    if (static_cast<int>(weights.size()) != n_users)
        throw std::invalid_argument("config: weights size must equal n_users");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("config: weights must be positive");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw std::invalid_argument("config: weights must sum to 1");
    if (static_cast<int>(ris_positions.size()) != n_ris)
        throw std::invalid_argument("config: ris_positions size must equal n_ris");
    if (!(user_region.x_max >= user_region.x_min) || !(user_region.y_max >= user_region.y_min))
        throw std::invalid_argument("config: degenerate user region");
    if (paths.n_paths < 1) throw std::invalid_argument("config: n_paths must be >= 1");
    if (!(path_loss.rho_b > 0.0)) throw std::invalid_argument("config: rho_b must be positive");
    if (path_loss.sigma_xi < 0.0) throw std::invalid_argument("config: sigma_xi must be >= 0");
    if (ris_geometry.kind == ArrayGeometry::Kind::ULA && ris_geometry.n_y != 1)
        throw std::invalid_argument("config: ULA requires n_y = 1");
}

double feature_scale(const SystemConfig& cfg) {
    const Eigen::Vector2d center((cfg.user_region.x_min + cfg.user_region.x_max) / 2.0,
                                 (cfg.user_region.y_min + cfg.user_region.y_max) / 2.0);
    double pl_sum = 0.0;
    for (const auto& rp : cfg.ris_positions) {
        const double r_bs = (rp - cfg.bs_position).norm();
        const double r_user = (center - rp).norm();
        pl_sum += path_loss_db(r_bs, cfg.path_loss) + path_loss_db(r_user, cfg.path_loss);
    }
    const double pl_ref = pl_sum / static_cast<double>(cfg.n_ris);
    return std::pow(10.0, pl_ref / 20.0);
}

std::string to_json(const SystemConfig& cfg) {
    json j;
    j["n_t"] = cfg.n_t;
    j["n_users"] = cfg.n_users;
    j["n_ris"] = cfg.n_ris;
    j["ris_elements_x"] = cfg.ris_geometry.n_x;
    j["ris_elements_y"] = cfg.ris_geometry.n_y;
    j["spacing_over_wavelength"] = cfg.ris_geometry.spacing_over_wavelength;
    j["p_max_dbm"] = watts_to_dbm(cfg.p_max);
    j["noise_dbm"] = watts_to_dbm(cfg.noise_power);
    j["weights"] = cfg.weights;
    j["bs_position"] = {cfg.bs_position.x(), cfg.bs_position.y()};
    json rps = json::array();
    for (const auto& rp : cfg.ris_positions) rps.push_back({rp.x(), rp.y()});
    j["ris_positions"] = rps;
    j["user_region"] = {{"x", {cfg.user_region.x_min, cfg.user_region.x_max}},
                        {"y", {cfg.user_region.y_min, cfg.user_region.y_max}}};
    j["path_loss"] = {{"rho_a", cfg.path_loss.rho_a},
                      {"rho_b", cfg.path_loss.rho_b},
                      {"sigma_xi_db", cfg.path_loss.sigma_xi}};
    j["paths"] = {{"count", cfg.paths.n_paths},
                  {"los_gain_scale", cfg.paths.gain_scale_los},
                  {"nlos_gain_scale", cfg.paths.gain_scale_nlos}};
    return j.dump(2);
}

SystemConfig system_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    SystemConfig cfg;
    cfg.n_t = j.value("n_t", cfg.n_t);
    cfg.n_users = j.value("n_users", cfg.n_users);
    cfg.n_ris = j.value("n_ris", cfg.n_ris);
    const int mx = j.value("ris_elements_x", cfg.ris_geometry.n_x);
    const int my = j.value("ris_elements_y", cfg.ris_geometry.n_y);
    const double sp = j.value("spacing_over_wavelength", cfg.ris_geometry.spacing_over_wavelength);
    cfg.ris_geometry = my > 1 ? ArrayGeometry::upa(mx, my, sp) : ArrayGeometry::ula(mx, sp);
    cfg.bs_spacing_over_wavelength = sp;
    cfg.p_max = dbm_to_watts(j.value("p_max_dbm", 30.0));
    cfg.noise_power = dbm_to_watts(j.value("noise_dbm", -85.0));
    if (j.contains("weights")) {
        cfg.weights = j["weights"].get<std::vector<double>>();
    } else {
        cfg.weights.assign(cfg.n_users, 1.0 / cfg.n_users);
    }
    if (j.contains("bs_position")) {
        auto v = j["bs_position"].get<std::vector<double>>();
        cfg.bs_position = {v.at(0), v.at(1)};
    }
    if (j.contains("ris_positions")) {
        cfg.ris_positions.clear();
        for (const auto& p : j["ris_positions"]) {
            auto v = p.get<std::vector<double>>();
            cfg.ris_positions.push_back({v.at(0), v.at(1)});
        }
    } else if (cfg.n_ris != 2) {
        throw std::invalid_argument("config: ris_positions required when n_ris != 2");
    }
    if (j.contains("user_region")) {
        auto x = j["user_region"]["x"].get<std::vector<double>>();
        auto y = j["user_region"]["y"].get<std::vector<double>>();
        cfg.user_region = {x.at(0), x.at(1), y.at(0), y.at(1)};
    }
    if (j.contains("path_loss")) {
        const auto& p = j["path_loss"];
        cfg.path_loss.rho_a = p.value("rho_a", cfg.path_loss.rho_a);
        cfg.path_loss.rho_b = p.value("rho_b", cfg.path_loss.rho_b);
        cfg.path_loss.sigma_xi = p.value("sigma_xi_db", cfg.path_loss.sigma_xi);
    }
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        cfg.paths.n_paths = p.value("count", cfg.paths.n_paths);
        cfg.paths.gain_scale_los = p.value("los_gain_scale", cfg.paths.gain_scale_los);
        cfg.paths.gain_scale_nlos = p.value("nlos_gain_scale", cfg.paths.gain_scale_nlos);
    }
    cfg.validate();
    return cfg;
}

SystemConfig load_system_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return system_config_from_json(ss.str());
}

void save_system_config(const SystemConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("config: cannot write " + path);
    out << to_json(cfg) << "\n";
}

}  // namespace risgnn
