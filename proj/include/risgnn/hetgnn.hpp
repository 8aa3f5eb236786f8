// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "risgnn/autodiff.hpp"
#include "risgnn/channel.hpp"
#include "risgnn/rng.hpp"
#include "risgnn/system_config.hpp"
#include "risgnn/system_core.hpp"

namespace risgnn {

// Model hyperparameters; everything else is derived from the scenario.
struct GnnConfig {
    int hidden = 128;
    // Total message-passing blocks: input block, blocks-2 core blocks, output
    // block. Minimum 2.
    int blocks = 4;
};

// Dimension table shared by graph construction, the network, and the heads.
struct GraphSpec {
    int n_users = 0;
    int n_ris = 0;
    int n_t = 0;
    int m = 0;
    int hidden = 0;
    int blocks = 0;
    Eigen::VectorXd weights;
    double scale = 1.0;         // amplitude applied to channels before featurization
    double noise_scaled = 0.0;  // noise power in the scaled domain
    double p_max = 0.0;

    int channel_dim() const { return 2 * m * n_t; }
    void validate() const;
};

GraphSpec make_graph_spec(const SystemConfig& cfg, const GnnConfig& gnn);

// Two-layer perceptron; softplus after the first layer, linear output.
struct Mlp {
    Eigen::MatrixXd w1, b1, w2, b2;
};

struct CoreBlockParams {
    Mlp msg_rr, upd_rr;  // reflector self loop
    Mlp msg_ur, upd_ur;  // user -> reflector
    Mlp msg_ru, upd_ru;  // reflector -> user
    Mlp msg_uu, upd_uu;  // other users -> user
    Mlp upd_self;        // own-state path when aggregating users
};

struct DecoderParams {
    Mlp out_ub, out_rb;          // node states -> transmitter summary
    Mlp out_rr, out_ur;          // node states -> per-reflector readout
    Mlp out_uu, out_ru;          // node states -> per-user readout
    Mlp assoc;                   // pairwise association score
    Eigen::MatrixXd w_f, b_f;    // beamformer head
    Eigen::MatrixXd w_th, b_th;  // phase head
};

struct ModelParams {
    Eigen::MatrixXd w_embed, b_embed;  // shared per-link channel embedding
    Eigen::MatrixXd w_enc, b_enc;      // user feature encoder
    Eigen::MatrixXd ris_init;          // learned reflector seed state
    Eigen::MatrixXd bs_init;           // learned transmitter seed state
    std::vector<CoreBlockParams> core;
    DecoderParams dec;

    // Visits every tensor with a stable name; order is fixed across calls.
    void for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
    void for_each(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;
    std::size_t parameter_count() const;
};

// He-style initialization for weights, zeros for biases, small normal seeds
// for the learned node states.
ModelParams init_params(const GraphSpec& spec, Rng& rng);

// Node states after some number of blocks, plus the per-link conditioning
// features that stay fixed across blocks.
struct GraphState {
    int step = 0;
    Eigen::VectorXd bs;
    std::vector<Eigen::VectorXd> ris;
    std::vector<Eigen::VectorXd> user;
    // edge[k][i]: scaled cascaded channel for (user k, reflector i), laid out
    // as [vec(Re), vec(Im)] of the (m x n_t) block, column-major.
    std::vector<std::vector<Eigen::VectorXd>> edge;
};

// Raw head outputs before the constraint layers.
struct RawOutputs {
    Eigen::MatrixXd f_raw;      // (2 n_t) x n_users, [Re; Im] per column
    Eigen::MatrixXd theta_raw;  // n_ris x (2 m), [Re | Im] per row
    Eigen::MatrixXd u_raw;      // n_users x n_ris association scores
};

// --- single-sample reference path ---
GraphState build_graph(const ChannelRealization& real, const GraphSpec& spec,
                       const ModelParams& params);
std::vector<Eigen::VectorXd> update_ris_nodes(const GraphState& state, const GraphSpec& spec,
                                              const CoreBlockParams& block);
std::vector<Eigen::VectorXd> update_user_nodes(const GraphState& state, const GraphSpec& spec,
                                               const CoreBlockParams& block);
RawOutputs decode_outputs(const GraphState& state, const GraphSpec& spec,
                          const DecoderParams& dec);

// Constraint heads.
Eigen::MatrixXcd normalize_power(const Eigen::MatrixXd& f_raw, double p_max);
std::vector<Eigen::RowVectorXcd> normalize_phases(const Eigen::MatrixXd& theta_raw);
Eigen::MatrixXd softmax_association(const Eigen::MatrixXd& u_raw);
Eigen::MatrixXd harden_association(const Eigen::MatrixXd& soft);

// Full forward pass: graph construction, blocks-2 synchronous core rounds,
// decode, constraint heads, hard association. Output satisfies all solution
// constraints.
Solution forward(const ChannelRealization& real, const GraphSpec& spec, const ModelParams& params);

// --- batched differentiable path ---

// Plain-data batch: everything a policy trace and the objective need.
struct BatchInputs {
    int n_users = 0, n_ris = 0, n_t = 0, m = 0, batch = 0;
    // x[k][i]: channel_dim x batch, scaled features per sample column.
    std::vector<std::vector<ad::Mat>> x;
    // ct_re/ct_im[k][i][b]: (n_t x m) transposed scaled cascaded blocks.
    std::vector<std::vector<std::vector<ad::Mat>>> ct_re, ct_im;
    // label[k]: n_ris x batch one-hot distance-rule association targets.
    std::vector<ad::Mat> label;
    Eigen::VectorXd weights;
    double noise_scaled = 0.0;
    double p_max = 0.0;
};

BatchInputs make_batch(const std::vector<const ChannelRealization*>& reals, const GraphSpec& spec);

// Var mirror of ModelParams, registered as tape leaves in for_each order.
struct TraceParams {
    std::vector<ad::Var> vars;
};
TraceParams register_params(ad::Tape& tape, const ModelParams& params);
// Accumulated leaf gradients in for_each order.
std::vector<ad::Mat> collect_gradients(const ad::Tape& tape, const TraceParams& tp);

// Post-constraint batched outputs of any policy network.
struct PolicyTrace {
    // f_re/f_im[k]: n_t x batch beamformer columns.
    std::vector<ad::Var> f_re, f_im;
    // th_re/th_im[i]: m x batch unit-modulus phase vectors.
    std::vector<ad::Var> th_re, th_im;
    // assoc[k]: n_ris x batch soft association rows (columns sum to 1).
    std::vector<ad::Var> assoc;
};

// Batched graph network forward pass on the tape.
PolicyTrace hetgnn_trace(ad::Tape& tape, const BatchInputs& in, const TraceParams& tp,
                         const GraphSpec& spec);

// Applies the power, unit-modulus, and softmax heads to raw batched outputs:
// f_raw[k] is (2 n_t x B), th_raw[i] is (2 m x B), u_rows[k] is (n_ris x B).
PolicyTrace constrain_heads(ad::Tape& tape, const BatchInputs& in,
                            const std::vector<ad::Var>& f_raw,
                            const std::vector<ad::Var>& th_raw,
                            const std::vector<ad::Var>& u_rows);

// Objective pieces shared by all trainable policies; wsr/ce are 1 x batch.
struct ObjectiveTrace {
    ad::Var wsr;
    ad::Var ce;
};
ObjectiveTrace objective_trace(ad::Tape& tape, const BatchInputs& in, const PolicyTrace& pol);
// Mean over the batch of -(weighted rate - eta * association penalty); 1x1.
ad::Var loss_trace(ad::Tape& tape, const ObjectiveTrace& obj, double eta);

// Hard solution for one batch column, in physical units.
Solution solution_from_trace(const ad::Tape& tape, const PolicyTrace& pol, const BatchInputs& in,
                             int column);

}  // namespace risgnn
