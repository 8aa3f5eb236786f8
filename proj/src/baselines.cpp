// SPDX-License-Identifier: Apache-2.0
#include "risgnn/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "risgnn/system_core.hpp"

namespace risgnn {

FlatPolicy::FlatPolicy(GraphSpec spec, std::vector<int> hidden_layers, std::uint64_t seed)
    : spec_(std::move(spec)), hidden_layers_(std::move(hidden_layers)) {
    spec_.validate();
    for (int w : hidden_layers_)
        if (w < 1) throw std::invalid_argument("flat policy: layer widths must be positive");
    const int in_dim = spec_.n_users * spec_.n_ris * spec_.channel_dim();
    const int out_dim =
        2 * spec_.n_t * spec_.n_users + 2 * spec_.m * spec_.n_ris + spec_.n_users * spec_.n_ris;
    Rng rng(seed);
    int prev = in_dim;
    auto push_layer = [&](int width, double stddev) {
        Eigen::MatrixXd w(width, prev);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.normal(0.0, stddev);
        w_.push_back(std::move(w));
        b_.push_back(Eigen::MatrixXd::Zero(width, 1));
        prev = width;
    };
    for (int width : hidden_layers_) push_layer(width, std::sqrt(2.0 / prev));
    push_layer(out_dim, std::sqrt(1.0 / prev));
}

void FlatPolicy::for_each_param(
    const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
    for (std::size_t l = 0; l < w_.size(); ++l) {
        const std::string n = "layer" + std::to_string(l);
        fn(n + ".w", w_[l]);
        fn(n + ".b", b_[l]);
    }
}

PolicyTrace FlatPolicy::trace(ad::Tape& tape, const BatchInputs& in,
                              std::vector<ad::Var>& leaves) {
    if (in.n_users != spec_.n_users || in.n_ris != spec_.n_ris || in.n_t != spec_.n_t ||
        in.m != spec_.m)
        throw std::invalid_argument("flat policy: batch does not match spec");
    leaves.clear();
    for (std::size_t l = 0; l < w_.size(); ++l) {
        leaves.push_back(tape.leaf(w_[l]));
        leaves.push_back(tape.leaf(b_[l]));
    }

    ad::Var z;
    {
        // One column per sample: every link feature block stacked, user-major.
        bool first = true;
        for (int k = 0; k < in.n_users; ++k)
            for (int i = 0; i < in.n_ris; ++i) {
                ad::Var xk = tape.constant(in.x[k][i]);
                z = first ? xk : ad::vcat(z, xk);
                first = false;
            }
    }
    for (std::size_t l = 0; l < w_.size(); ++l) {
        z = ad::add_colvec(ad::matmul(leaves[2 * l], z), leaves[2 * l + 1]);
        if (l + 1 < w_.size()) z = ad::softplus(z);
    }

    std::vector<ad::Var> f_raw(in.n_users), th_raw(in.n_ris), u_rows(in.n_users);
    int at = 0;
    for (int k = 0; k < in.n_users; ++k, at += 2 * in.n_t) f_raw[k] = ad::rows(z, at, 2 * in.n_t);
    for (int i = 0; i < in.n_ris; ++i, at += 2 * in.m) th_raw[i] = ad::rows(z, at, 2 * in.m);
    for (int k = 0; k < in.n_users; ++k, at += in.n_ris) u_rows[k] = ad::rows(z, at, in.n_ris);
    return constrain_heads(tape, in, f_raw, th_raw, u_rows);
}

std::unique_ptr<FlatPolicy> make_flat_policy(const GraphSpec& spec, FlatSize size,
                                             std::size_t reference_params, std::uint64_t seed) {
    if (reference_params == 0)
        throw std::invalid_argument("make_flat_policy: reference parameter count required");
    const double in_dim = spec.n_users * spec.n_ris * spec.channel_dim();
    const double out_dim =
        2.0 * spec.n_t * spec.n_users + 2.0 * spec.m * spec.n_ris + spec.n_users * spec.n_ris;
    std::vector<int> layers;
    if (size == FlatSize::small) {
        // Single hidden layer: params ~ in*w + w*out.
        const double target = static_cast<double>(reference_params);
        int w = static_cast<int>(std::round(target / (in_dim + out_dim + 1.0)));
        layers = {std::max(8, w)};
    } else {
        // Two hidden layers: params ~ in*w + w^2 + w*out >= 4x reference.
        const double target = 4.0 * static_cast<double>(reference_params);
        const double a = 1.0, b = in_dim + out_dim + 2.0, c = -target;
        int w = static_cast<int>(std::ceil((-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a)));
        layers = {std::max(8, w), std::max(8, w)};
    }
    return std::make_unique<FlatPolicy>(spec, layers, seed);
}

ExhaustiveResult exhaustive_association(const ChannelRealization& real, const SystemConfig& cfg,
                                        const std::vector<Eigen::RowVectorXcd>& theta,
                                        const WmmseConfig& wcfg) {
    cfg.validate();
    double combos = std::pow(static_cast<double>(cfg.n_ris), cfg.n_users);
    if (combos > 4096.0)
        throw std::invalid_argument("exhaustive_association: search space exceeds 4096");
    const int total = static_cast<int>(combos);

    ExhaustiveResult best;
    best.utility = -std::numeric_limits<double>::infinity();
    std::vector<int> assign(static_cast<std::size_t>(cfg.n_users), 0);
    for (int idx = 0; idx < total; ++idx) {
        // Decode idx into per-user reflector choices, user 0 most significant,
        // so enumeration order is lexicographic in (i_0, ..., i_{K-1}).
        int rem = idx;
        for (int k = cfg.n_users - 1; k >= 0; --k) {
            assign[static_cast<std::size_t>(k)] = rem % cfg.n_ris;
            rem /= cfg.n_ris;
        }
        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(cfg.n_users, cfg.n_ris);
        for (int k = 0; k < cfg.n_users; ++k) u(k, assign[static_cast<std::size_t>(k)]) = 1.0;
        WmmseResult res = wmmse_beamforming(real, cfg, theta, u, wcfg);
        const double wsr = weighted_sum_rate(real, res.solution, cfg);
        if (wsr > best.utility) {
            best.utility = wsr;
            best.solution = std::move(res.solution);
        }
    }
    best.evaluated = total;
    return best;
}

}  // namespace risgnn
