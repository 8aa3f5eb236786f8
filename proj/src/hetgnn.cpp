// SPDX-License-Identifier: Apache-2.0
#include "risgnn/hetgnn.hpp"

#include <cmath>
#include <stdexcept>

#include "risgnn/errors.hpp"

namespace risgnn {

namespace {

constexpr double kNormEps = 1e-24;   // squared-magnitude floor in constraint heads
constexpr double kScoreFloor = 1e-12;  // association score floor inside log

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Eigen::VectorXd apply_mlp(const Mlp& m, const Eigen::VectorXd& x) {
    Eigen::VectorXd h = m.w1 * x + m.b1.col(0);
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = softplus_scalar(h(i));
    return m.w2 * h + m.b2.col(0);
}

Eigen::VectorXd vjoin(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd r(a.size() + b.size());
    r << a, b;
    return r;
}

Eigen::VectorXd vjoin(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c) {
    Eigen::VectorXd r(a.size() + b.size() + c.size());
    r << a, b, c;
    return r;
}

// Feature layout for one link: [vec(Re), vec(Im)] of the scaled cascaded
// block, column-major.
Eigen::VectorXd link_features(const Eigen::MatrixXcd& cascaded, double scale) {
    const Eigen::Index n = cascaded.size();
    Eigen::VectorXd f(2 * n);
    Eigen::MatrixXd re = scale * cascaded.real();
    Eigen::MatrixXd im = scale * cascaded.imag();
    f.head(n) = Eigen::Map<const Eigen::VectorXd>(re.data(), n);
    f.tail(n) = Eigen::Map<const Eigen::VectorXd>(im.data(), n);
    return f;
}

double noise_feature(double noise_scaled) { return 0.1 * std::log10(noise_scaled); }

template <class MP, class Fn>
void visit_mlp(MP& m, const std::string& prefix, Fn&& fn) {
    fn(prefix + ".w1", m.w1);
    fn(prefix + ".b1", m.b1);
    fn(prefix + ".w2", m.w2);
    fn(prefix + ".b2", m.b2);
}

template <class MP, class Fn>
void visit_params(MP& p, Fn&& fn) {
    fn("embed.w", p.w_embed);
    fn("embed.b", p.b_embed);
    fn("enc.w", p.w_enc);
    fn("enc.b", p.b_enc);
    fn("init.ris", p.ris_init);
    fn("init.bs", p.bs_init);
    for (std::size_t b = 0; b < p.core.size(); ++b) {
        const std::string pre = "core" + std::to_string(b) + ".";
        visit_mlp(p.core[b].msg_rr, pre + "msg_rr", fn);
        visit_mlp(p.core[b].upd_rr, pre + "upd_rr", fn);
        visit_mlp(p.core[b].msg_ur, pre + "msg_ur", fn);
        visit_mlp(p.core[b].upd_ur, pre + "upd_ur", fn);
        visit_mlp(p.core[b].msg_ru, pre + "msg_ru", fn);
        visit_mlp(p.core[b].upd_ru, pre + "upd_ru", fn);
        visit_mlp(p.core[b].msg_uu, pre + "msg_uu", fn);
        visit_mlp(p.core[b].upd_uu, pre + "upd_uu", fn);
        visit_mlp(p.core[b].upd_self, pre + "upd_self", fn);
    }
    visit_mlp(p.dec.out_ub, "dec.out_ub", fn);
    visit_mlp(p.dec.out_rb, "dec.out_rb", fn);
    visit_mlp(p.dec.out_rr, "dec.out_rr", fn);
    visit_mlp(p.dec.out_ur, "dec.out_ur", fn);
    visit_mlp(p.dec.out_uu, "dec.out_uu", fn);
    visit_mlp(p.dec.out_ru, "dec.out_ru", fn);
    visit_mlp(p.dec.assoc, "dec.assoc", fn);
    fn("dec.f.w", p.dec.w_f);
    fn("dec.f.b", p.dec.b_f);
    fn("dec.th.w", p.dec.w_th);
    fn("dec.th.b", p.dec.b_th);
}

}  // namespace

void GraphSpec::validate() const {
    if (n_users < 1 || n_ris < 1 || n_t < 1 || m < 1)
        throw std::invalid_argument("graph spec: scenario dimensions must be positive");
    if (hidden < 1) throw std::invalid_argument("graph spec: hidden width must be positive");
    if (blocks < 2) throw std::invalid_argument("graph spec: at least two blocks required");
    if (weights.size() != n_users) throw std::invalid_argument("graph spec: one weight per user");
    if (!(scale > 0.0)) throw std::invalid_argument("graph spec: scale must be positive");
    if (!(noise_scaled > 0.0)) throw std::invalid_argument("graph spec: noise must be positive");
    if (!(p_max > 0.0)) throw std::invalid_argument("graph spec: power budget must be positive");
}

GraphSpec make_graph_spec(const SystemConfig& cfg, const GnnConfig& gnn) {
    cfg.validate();
    GraphSpec s;
    s.n_users = cfg.n_users;
    s.n_ris = cfg.n_ris;
    s.n_t = cfg.n_t;
    s.m = cfg.ris_elements();
    s.hidden = gnn.hidden;
    s.blocks = gnn.blocks;
    s.weights = Eigen::Map<const Eigen::VectorXd>(cfg.weights.data(),
                                                  static_cast<Eigen::Index>(cfg.weights.size()));
    s.scale = feature_scale(cfg);
    s.noise_scaled = s.scale * s.scale * cfg.noise_power;
    s.p_max = cfg.p_max;
    s.validate();
    return s;
}

void ModelParams::for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
    visit_params(*this, fn);
}

void ModelParams::for_each(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
    visit_params(*this, fn);
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&n](const std::string&, const Eigen::MatrixXd& m) { n += m.size(); });
    return n;
}

namespace {

Eigen::MatrixXd weight_init(int rows, int cols, double stddev, Rng& rng) {
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.normal(0.0, stddev);
    return w;
}

Mlp mlp_init(int in, int mid, int out, Rng& rng) {
    Mlp m;
    m.w1 = weight_init(mid, in, std::sqrt(2.0 / in), rng);
    m.b1 = Eigen::MatrixXd::Zero(mid, 1);
    m.w2 = weight_init(out, mid, std::sqrt(1.0 / mid), rng);
    m.b2 = Eigen::MatrixXd::Zero(out, 1);
    return m;
}

}  // namespace

ModelParams init_params(const GraphSpec& spec, Rng& rng) {
    spec.validate();
    const int h = spec.hidden;
    const int ch = spec.channel_dim();
    ModelParams p;
    p.w_embed = weight_init(h, ch, std::sqrt(1.0 / ch), rng);
    p.b_embed = Eigen::MatrixXd::Zero(h, 1);
    p.w_enc = weight_init(h, h + 2, std::sqrt(2.0 / (h + 2)), rng);
    p.b_enc = Eigen::MatrixXd::Zero(h, 1);
    p.ris_init = weight_init(h, 1, 0.1, rng);
    p.bs_init = weight_init(h, 1, 0.1, rng);
    p.core.resize(static_cast<std::size_t>(std::max(0, spec.blocks - 2)));
    for (auto& blk : p.core) {
        blk.msg_rr = mlp_init(h, h, h, rng);
        blk.upd_rr = mlp_init(2 * h, h, h, rng);
        blk.msg_ur = mlp_init(h + ch, h, h, rng);
        blk.upd_ur = mlp_init(2 * h, h, h, rng);
        blk.msg_ru = mlp_init(h + ch, h, h, rng);
        blk.upd_ru = mlp_init(2 * h, h, h, rng);
        blk.msg_uu = mlp_init(h, h, h, rng);
        blk.upd_uu = mlp_init(h, h, h, rng);
        blk.upd_self = mlp_init(2 * h, h, h, rng);
    }
    p.dec.out_ub = mlp_init(h, h, h, rng);
    p.dec.out_rb = mlp_init(h, h, h, rng);
    p.dec.out_rr = mlp_init(h, h, h, rng);
    p.dec.out_ur = mlp_init(h + ch, h, h, rng);
    p.dec.out_uu = mlp_init(h, h, h, rng);
    p.dec.out_ru = mlp_init(h + ch, h, h, rng);
    p.dec.assoc = mlp_init(2 * h + ch, h, 1, rng);
    p.dec.w_f = weight_init(2 * spec.n_t, 2 * h, std::sqrt(1.0 / (2 * h)), rng);
    p.dec.b_f = Eigen::MatrixXd::Zero(2 * spec.n_t, 1);
    p.dec.w_th = weight_init(2 * spec.m, h, std::sqrt(1.0 / h), rng);
    p.dec.b_th = Eigen::MatrixXd::Zero(2 * spec.m, 1);
    return p;
}

GraphState build_graph(const ChannelRealization& real, const GraphSpec& spec,
                       const ModelParams& params) {
    spec.validate();
    if (real.n_ris() != spec.n_ris || real.n_users() != spec.n_users)
        throw std::invalid_argument("build_graph: realization does not match spec");
    GraphState st;
    st.step = 0;
    st.edge.assign(spec.n_users, std::vector<Eigen::VectorXd>(spec.n_ris));
    for (int k = 0; k < spec.n_users; ++k)
        for (int i = 0; i < spec.n_ris; ++i) {
            const Eigen::MatrixXcd& c = real.cascaded[i][k];
            if (c.rows() != spec.m || c.cols() != spec.n_t)
                throw std::invalid_argument("build_graph: cascaded block shape mismatch");
            st.edge[k][i] = link_features(c, spec.scale);
        }
    const double nf = noise_feature(spec.noise_scaled);
    st.user.resize(spec.n_users);
    for (int k = 0; k < spec.n_users; ++k) {
        Eigen::VectorXd me = Eigen::VectorXd::Zero(spec.hidden);
        for (int i = 0; i < spec.n_ris; ++i)
            me += params.w_embed * st.edge[k][i] + params.b_embed.col(0);
        me /= static_cast<double>(spec.n_ris);
        Eigen::VectorXd extra(2);
        extra << spec.weights(k), nf;
        Eigen::VectorXd z = params.w_enc * vjoin(me, extra) + params.b_enc.col(0);
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = softplus_scalar(z(i));
        st.user[k] = z;
    }
    st.ris.assign(spec.n_ris, params.ris_init.col(0));
    st.bs = params.bs_init.col(0);
    return st;
}

std::vector<Eigen::VectorXd> update_ris_nodes(const GraphState& state, const GraphSpec& spec,
                                              const CoreBlockParams& block) {
    std::vector<Eigen::VectorXd> out(state.ris.size());
    for (std::size_t i = 0; i < state.ris.size(); ++i) {
        const Eigen::VectorXd& v = state.ris[i];
        Eigen::VectorXd xi_rr = apply_mlp(block.upd_rr, vjoin(apply_mlp(block.msg_rr, v), v));
        Eigen::VectorXd agg = Eigen::VectorXd::Zero(spec.hidden);
        for (std::size_t k = 0; k < state.user.size(); ++k)
            agg += apply_mlp(block.msg_ur, vjoin(state.user[k], state.edge[k][i]));
        agg /= static_cast<double>(state.user.size());
        Eigen::VectorXd xi_ur = apply_mlp(block.upd_ur, vjoin(agg, v));
        out[i] = 0.5 * (xi_rr + xi_ur) + v;
    }
    return out;
}

std::vector<Eigen::VectorXd> update_user_nodes(const GraphState& state, const GraphSpec& spec,
                                               const CoreBlockParams& block) {
    const std::size_t n_users = state.user.size();
    std::vector<Eigen::VectorXd> msg_u(n_users);
    for (std::size_t j = 0; j < n_users; ++j) msg_u[j] = apply_mlp(block.msg_uu, state.user[j]);
    std::vector<Eigen::VectorXd> out(n_users);
    for (std::size_t k = 0; k < n_users; ++k) {
        const Eigen::VectorXd& v = state.user[k];
        Eigen::VectorXd agg = Eigen::VectorXd::Zero(spec.hidden);
        for (std::size_t i = 0; i < state.ris.size(); ++i)
            agg += apply_mlp(block.msg_ru, vjoin(state.ris[i], state.edge[k][i]));
        agg /= static_cast<double>(state.ris.size());
        Eigen::VectorXd xi_ru = apply_mlp(block.upd_ru, vjoin(agg, v));
        Eigen::VectorXd xi_self = apply_mlp(block.upd_self, vjoin(msg_u[k], v));
        Eigen::VectorXd xi_u = xi_self;
        if (n_users > 1) {
            Eigen::VectorXd peers =
                Eigen::VectorXd::Constant(spec.hidden, -std::numeric_limits<double>::infinity());
            for (std::size_t j = 0; j < n_users; ++j)
                if (j != k) peers = peers.cwiseMax(msg_u[j]);
            xi_u = xi_u.cwiseMax(apply_mlp(block.upd_uu, peers));
        }
        out[k] = xi_ru.cwiseMax(xi_u) + v;
    }
    return out;
}

RawOutputs decode_outputs(const GraphState& state, const GraphSpec& spec,
                          const DecoderParams& dec) {
    const int n_users = static_cast<int>(state.user.size());
    const int n_ris = static_cast<int>(state.ris.size());

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(spec.hidden);
    for (int k = 0; k < n_users; ++k) mu += apply_mlp(dec.out_ub, state.user[k]);
    mu /= static_cast<double>(n_users);
    Eigen::VectorXd mr = Eigen::VectorXd::Zero(spec.hidden);
    for (int i = 0; i < n_ris; ++i) mr += apply_mlp(dec.out_rb, state.ris[i]);
    mr /= static_cast<double>(n_ris);
    Eigen::VectorXd v_b = state.bs + 0.5 * (mu + mr);

    std::vector<Eigen::VectorXd> r_out(n_ris);
    for (int i = 0; i < n_ris; ++i) {
        Eigen::VectorXd agg = Eigen::VectorXd::Zero(spec.hidden);
        for (int k = 0; k < n_users; ++k)
            agg += apply_mlp(dec.out_ur, vjoin(state.user[k], state.edge[k][i]));
        agg /= static_cast<double>(n_users);
        r_out[i] = 0.5 * (apply_mlp(dec.out_rr, state.ris[i]) + agg);
    }
    std::vector<Eigen::VectorXd> u_out(n_users);
    for (int k = 0; k < n_users; ++k) {
        Eigen::VectorXd agg = Eigen::VectorXd::Zero(spec.hidden);
        for (int i = 0; i < n_ris; ++i)
            agg += apply_mlp(dec.out_ru, vjoin(state.ris[i], state.edge[k][i]));
        agg /= static_cast<double>(n_ris);
        u_out[k] = 0.5 * (apply_mlp(dec.out_uu, state.user[k]) + agg);
    }

    RawOutputs raw;
    raw.f_raw.resize(2 * spec.n_t, n_users);
    for (int k = 0; k < n_users; ++k)
        raw.f_raw.col(k) = dec.w_f * vjoin(u_out[k], v_b) + dec.b_f.col(0);
    raw.theta_raw.resize(n_ris, 2 * spec.m);
    for (int i = 0; i < n_ris; ++i)
        raw.theta_raw.row(i) = (dec.w_th * r_out[i] + dec.b_th.col(0)).transpose();
    raw.u_raw.resize(n_users, n_ris);
    for (int k = 0; k < n_users; ++k)
        for (int i = 0; i < n_ris; ++i)
            raw.u_raw(k, i) = apply_mlp(dec.assoc, vjoin(u_out[k], r_out[i], state.edge[k][i]))(0);
    return raw;
}

Eigen::MatrixXcd normalize_power(const Eigen::MatrixXd& f_raw, double p_max) {
    if (f_raw.rows() % 2 != 0) throw std::invalid_argument("normalize_power: odd row count");
    if (!(p_max > 0.0)) throw std::invalid_argument("normalize_power: power budget must be positive");
    const Eigen::Index n_t = f_raw.rows() / 2;
    const double factor = std::sqrt(p_max) / std::sqrt(f_raw.squaredNorm() + kNormEps);
    Eigen::MatrixXcd f(n_t, f_raw.cols());
    for (Eigen::Index k = 0; k < f_raw.cols(); ++k)
        for (Eigen::Index n = 0; n < n_t; ++n)
            f(n, k) = std::complex<double>(f_raw(n, k), f_raw(n_t + n, k)) * factor;
    return f;
}

std::vector<Eigen::RowVectorXcd> normalize_phases(const Eigen::MatrixXd& theta_raw) {
    if (theta_raw.cols() % 2 != 0) throw std::invalid_argument("normalize_phases: odd column count");
    const Eigen::Index m = theta_raw.cols() / 2;
    std::vector<Eigen::RowVectorXcd> theta(theta_raw.rows());
    for (Eigen::Index i = 0; i < theta_raw.rows(); ++i) {
        theta[i].resize(m);
        for (Eigen::Index e = 0; e < m; ++e) {
            const double re = theta_raw(i, e);
            const double im = theta_raw(i, m + e);
            const double r = std::sqrt(re * re + im * im + kNormEps);
            theta[i](e) = std::complex<double>(re / r, im / r);
        }
    }
    return theta;
}

Eigen::MatrixXd softmax_association(const Eigen::MatrixXd& u_raw) {
    Eigen::MatrixXd soft(u_raw.rows(), u_raw.cols());
    for (Eigen::Index k = 0; k < u_raw.rows(); ++k) {
        const double mx = u_raw.row(k).maxCoeff();
        Eigen::ArrayXd e = (u_raw.row(k).array() - mx).exp();
        soft.row(k) = (e / e.sum()).matrix();
    }
    return soft;
}

Eigen::MatrixXd harden_association(const Eigen::MatrixXd& soft) {
    Eigen::MatrixXd hard = Eigen::MatrixXd::Zero(soft.rows(), soft.cols());
    for (Eigen::Index k = 0; k < soft.rows(); ++k) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < soft.cols(); ++i)
            if (soft(k, i) > soft(k, best)) best = i;
        hard(k, best) = 1.0;
    }
    return hard;
}

Solution forward(const ChannelRealization& real, const GraphSpec& spec,
                 const ModelParams& params) {
    GraphState st = build_graph(real, spec, params);
    for (int t = 0; t < spec.blocks - 2; ++t) {
        const auto& blk = params.core.at(static_cast<std::size_t>(t));
        auto new_ris = update_ris_nodes(st, spec, blk);
        auto new_user = update_user_nodes(st, spec, blk);
        st.ris = std::move(new_ris);
        st.user = std::move(new_user);
        ++st.step;
    }
    RawOutputs raw = decode_outputs(st, spec, params.dec);
    Solution sol;
    sol.f = normalize_power(raw.f_raw, spec.p_max);
    sol.theta = normalize_phases(raw.theta_raw);
    sol.u = harden_association(softmax_association(raw.u_raw));
    return sol;
}

// --- batched path ---

BatchInputs make_batch(const std::vector<const ChannelRealization*>& reals,
                       const GraphSpec& spec) {
    if (reals.empty()) throw std::invalid_argument("make_batch: empty batch");
    BatchInputs in;
    in.n_users = spec.n_users;
    in.n_ris = spec.n_ris;
    in.n_t = spec.n_t;
    in.m = spec.m;
    in.batch = static_cast<int>(reals.size());
    in.weights = spec.weights;
    in.noise_scaled = spec.noise_scaled;
    in.p_max = spec.p_max;
    const int ch = spec.channel_dim();
    in.x.assign(in.n_users, std::vector<ad::Mat>(in.n_ris, ad::Mat(ch, in.batch)));
    in.ct_re.assign(in.n_users,
                    std::vector<std::vector<ad::Mat>>(in.n_ris, std::vector<ad::Mat>(in.batch)));
    in.ct_im = in.ct_re;
    in.label.assign(in.n_users, ad::Mat::Zero(in.n_ris, in.batch));
    for (int b = 0; b < in.batch; ++b) {
        const ChannelRealization& real = *reals[b];
        if (real.n_ris() != in.n_ris || real.n_users() != in.n_users)
            throw std::invalid_argument("make_batch: realization does not match spec");
        for (int k = 0; k < in.n_users; ++k) {
            for (int i = 0; i < in.n_ris; ++i) {
                const Eigen::MatrixXcd& c = real.cascaded[i][k];
                if (c.rows() != in.m || c.cols() != in.n_t)
                    throw std::invalid_argument("make_batch: cascaded block shape mismatch");
                in.x[k][i].col(b) = link_features(c, spec.scale);
                in.ct_re[k][i][b] = (spec.scale * c.real()).transpose();
                in.ct_im[k][i][b] = (spec.scale * c.imag()).transpose();
            }
            int nearest = 0;
            for (int i = 1; i < in.n_ris; ++i)
                if (real.distances(i, k) < real.distances(nearest, k)) nearest = i;
            in.label[k](nearest, b) = 1.0;
        }
    }
    return in;
}

TraceParams register_params(ad::Tape& tape, const ModelParams& params) {
    TraceParams tp;
    params.for_each([&](const std::string&, const Eigen::MatrixXd& m) {
        tp.vars.push_back(tape.leaf(m));
    });
    return tp;
}

std::vector<ad::Mat> collect_gradients(const ad::Tape& tape, const TraceParams& tp) {
    std::vector<ad::Mat> grads;
    grads.reserve(tp.vars.size());
    for (ad::Var v : tp.vars) grads.push_back(tape.grad(v));
    return grads;
}

namespace {

struct TraceMlp {
    ad::Var w1, b1, w2, b2;
};

// Walks the flat leaf list in the same order visit_params emits tensors.
struct ParamCursor {
    const std::vector<ad::Var>& vars;
    std::size_t i = 0;
    ad::Var next() {
        if (i >= vars.size()) throw std::logic_error("parameter cursor out of range");
        return vars[i++];
    }
    TraceMlp mlp() {
        TraceMlp m;
        m.w1 = next();
        m.b1 = next();
        m.w2 = next();
        m.b2 = next();
        return m;
    }
};

struct TraceBlock {
    TraceMlp msg_rr, upd_rr, msg_ur, upd_ur, msg_ru, upd_ru, msg_uu, upd_uu, upd_self;
};

ad::Var apply_mlp_t(ad::Tape&, const TraceMlp& m, ad::Var x) {
    ad::Var h = ad::softplus(ad::add_colvec(ad::matmul(m.w1, x), m.b1));
    return ad::add_colvec(ad::matmul(m.w2, h), m.b2);
}

ad::Var broadcast_cols(ad::Tape& tape, ad::Var col, int n) {
    return ad::matmul(col, tape.constant(ad::Mat::Ones(1, n)));
}

}  // namespace

PolicyTrace hetgnn_trace(ad::Tape& tape, const BatchInputs& in, const TraceParams& tp,
                         const GraphSpec& spec) {
    spec.validate();
    if (in.n_users != spec.n_users || in.n_ris != spec.n_ris || in.n_t != spec.n_t ||
        in.m != spec.m)
        throw std::invalid_argument("hetgnn_trace: batch does not match spec");
    const int K = in.n_users, R = in.n_ris, B = in.batch;

    ParamCursor cur{tp.vars};
    ad::Var w_embed = cur.next(), b_embed = cur.next();
    ad::Var w_enc = cur.next(), b_enc = cur.next();
    ad::Var ris_init = cur.next(), bs_init = cur.next();
    std::vector<TraceBlock> blocks(static_cast<std::size_t>(std::max(0, spec.blocks - 2)));
    for (auto& blk : blocks) {
        blk.msg_rr = cur.mlp();
        blk.upd_rr = cur.mlp();
        blk.msg_ur = cur.mlp();
        blk.upd_ur = cur.mlp();
        blk.msg_ru = cur.mlp();
        blk.upd_ru = cur.mlp();
        blk.msg_uu = cur.mlp();
        blk.upd_uu = cur.mlp();
        blk.upd_self = cur.mlp();
    }
    TraceMlp out_ub = cur.mlp(), out_rb = cur.mlp(), out_rr = cur.mlp(), out_ur = cur.mlp();
    TraceMlp out_uu = cur.mlp(), out_ru = cur.mlp(), assoc_mlp = cur.mlp();
    ad::Var w_f = cur.next(), b_f = cur.next(), w_th = cur.next(), b_th = cur.next();
    if (cur.i != tp.vars.size()) throw std::logic_error("hetgnn_trace: leftover parameters");

    // Edge features as constants.
    std::vector<std::vector<ad::Var>> xc(K, std::vector<ad::Var>(R));
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < R; ++i) xc[k][i] = tape.constant(in.x[k][i]);

    // Input block.
    std::vector<ad::Var> user(K), ris(R);
    {
        ad::Mat extra(2, B);
        const double nf = noise_feature(spec.noise_scaled);
        for (int k = 0; k < K; ++k) {
            std::vector<ad::Var> embeds;
            embeds.reserve(R);
            for (int i = 0; i < R; ++i)
                embeds.push_back(ad::add_colvec(ad::matmul(w_embed, xc[k][i]), b_embed));
            ad::Var me = ad::mean_list(embeds);
            extra.row(0).setConstant(spec.weights(k));
            extra.row(1).setConstant(nf);
            ad::Var z = ad::vcat(me, tape.constant(extra));
            user[k] = ad::softplus(ad::add_colvec(ad::matmul(w_enc, z), b_enc));
        }
        ad::Var r0 = broadcast_cols(tape, ris_init, B);
        for (int i = 0; i < R; ++i) ris[i] = r0;
    }

    // Core blocks, synchronous updates.
    for (const auto& blk : blocks) {
        std::vector<ad::Var> new_ris(R), new_user(K);
        for (int i = 0; i < R; ++i) {
            ad::Var xi_rr =
                apply_mlp_t(tape, blk.upd_rr, ad::vcat(apply_mlp_t(tape, blk.msg_rr, ris[i]), ris[i]));
            std::vector<ad::Var> msgs;
            msgs.reserve(K);
            for (int k = 0; k < K; ++k)
                msgs.push_back(apply_mlp_t(tape, blk.msg_ur, ad::vcat(user[k], xc[k][i])));
            ad::Var xi_ur = apply_mlp_t(tape, blk.upd_ur, ad::vcat(ad::mean_list(msgs), ris[i]));
            new_ris[i] = ad::add(ad::scale(ad::add(xi_rr, xi_ur), 0.5), ris[i]);
        }
        std::vector<ad::Var> msg_u(K);
        for (int j = 0; j < K; ++j) msg_u[j] = apply_mlp_t(tape, blk.msg_uu, user[j]);
        for (int k = 0; k < K; ++k) {
            std::vector<ad::Var> msgs;
            msgs.reserve(R);
            for (int i = 0; i < R; ++i)
                msgs.push_back(apply_mlp_t(tape, blk.msg_ru, ad::vcat(ris[i], xc[k][i])));
            ad::Var xi_ru = apply_mlp_t(tape, blk.upd_ru, ad::vcat(ad::mean_list(msgs), user[k]));
            ad::Var xi_u = apply_mlp_t(tape, blk.upd_self, ad::vcat(msg_u[k], user[k]));
            if (K > 1) {
                std::vector<ad::Var> peers;
                peers.reserve(K - 1);
                for (int j = 0; j < K; ++j)
                    if (j != k) peers.push_back(msg_u[j]);
                ad::Var agg = ad::max_list(peers);
                xi_u = ad::max_list({xi_u, apply_mlp_t(tape, blk.upd_uu, agg)});
            }
            new_user[k] = ad::add(ad::max_list({xi_ru, xi_u}), user[k]);
        }
        ris = std::move(new_ris);
        user = std::move(new_user);
    }

    // Output block.
    std::vector<ad::Var> ub_msgs, rb_msgs;
    for (int k = 0; k < K; ++k) ub_msgs.push_back(apply_mlp_t(tape, out_ub, user[k]));
    for (int i = 0; i < R; ++i) rb_msgs.push_back(apply_mlp_t(tape, out_rb, ris[i]));
    ad::Var v_b = ad::add(broadcast_cols(tape, bs_init, B),
                          ad::scale(ad::add(ad::mean_list(ub_msgs), ad::mean_list(rb_msgs)), 0.5));

    std::vector<ad::Var> r_out(R), u_out(K);
    for (int i = 0; i < R; ++i) {
        std::vector<ad::Var> msgs;
        for (int k = 0; k < K; ++k)
            msgs.push_back(apply_mlp_t(tape, out_ur, ad::vcat(user[k], xc[k][i])));
        r_out[i] =
            ad::scale(ad::add(apply_mlp_t(tape, out_rr, ris[i]), ad::mean_list(msgs)), 0.5);
    }
    for (int k = 0; k < K; ++k) {
        std::vector<ad::Var> msgs;
        for (int i = 0; i < R; ++i)
            msgs.push_back(apply_mlp_t(tape, out_ru, ad::vcat(ris[i], xc[k][i])));
        u_out[k] =
            ad::scale(ad::add(apply_mlp_t(tape, out_uu, user[k]), ad::mean_list(msgs)), 0.5);
    }

    // Raw heads.
    std::vector<ad::Var> f_raw(K), th_raw(R), u_rows(K);
    for (int k = 0; k < K; ++k)
        f_raw[k] = ad::add_colvec(ad::matmul(w_f, ad::vcat(u_out[k], v_b)), b_f);
    for (int i = 0; i < R; ++i) th_raw[i] = ad::add_colvec(ad::matmul(w_th, r_out[i]), b_th);
    for (int k = 0; k < K; ++k) {
        std::vector<ad::Var> scores;
        scores.reserve(R);
        for (int i = 0; i < R; ++i)
            scores.push_back(apply_mlp_t(tape, assoc_mlp, ad::vcat(u_out[k], r_out[i], xc[k][i])));
        ad::Var stacked = scores[0];
        for (int i = 1; i < R; ++i) stacked = ad::vcat(stacked, scores[i]);
        u_rows[k] = stacked;
    }

    return constrain_heads(tape, in, f_raw, th_raw, u_rows);
}

PolicyTrace constrain_heads(ad::Tape& tape, const BatchInputs& in,
                            const std::vector<ad::Var>& f_raw,
                            const std::vector<ad::Var>& th_raw,
                            const std::vector<ad::Var>& u_rows) {
    const int K = in.n_users, R = in.n_ris;
    if (static_cast<int>(f_raw.size()) != K || static_cast<int>(th_raw.size()) != R ||
        static_cast<int>(u_rows.size()) != K)
        throw std::invalid_argument("constrain_heads: raw output counts do not match batch");
    PolicyTrace pol;
    // Power head: one scale factor per sample column.
    {
        ad::Var ssq;
        for (int k = 0; k < K; ++k) {
            ad::Var s = ad::colsum(ad::mul(f_raw[k], f_raw[k]));
            ssq = (k == 0) ? s : ad::add(ssq, s);
        }
        ad::Var factor =
            ad::scale(ad::inv_(ad::sqrt_(ad::add_scalar(ssq, kNormEps))), std::sqrt(in.p_max));
        pol.f_re.resize(K);
        pol.f_im.resize(K);
        for (int k = 0; k < K; ++k) {
            pol.f_re[k] = ad::mul_rowvec(ad::rows(f_raw[k], 0, in.n_t), factor);
            pol.f_im[k] = ad::mul_rowvec(ad::rows(f_raw[k], in.n_t, in.n_t), factor);
        }
    }
    // Unit-modulus head.
    pol.th_re.resize(R);
    pol.th_im.resize(R);
    for (int i = 0; i < R; ++i) {
        ad::Var re = ad::rows(th_raw[i], 0, in.m);
        ad::Var im = ad::rows(th_raw[i], in.m, in.m);
        ad::Var rsq = ad::add(ad::mul(re, re), ad::mul(im, im));
        ad::Var rinv = ad::inv_(ad::sqrt_(ad::add_scalar(rsq, kNormEps)));
        pol.th_re[i] = ad::mul(re, rinv);
        pol.th_im[i] = ad::mul(im, rinv);
    }
    // Softmax head with detached stabilizer.
    pol.assoc.resize(K);
    for (int k = 0; k < K; ++k) {
        ad::Mat mx = tape.value(u_rows[k]).colwise().maxCoeff();
        ad::Var e = ad::exp_(ad::sub_rowvec_const(u_rows[k], mx));
        pol.assoc[k] = ad::mul_rowvec(e, ad::inv_(ad::colsum(e)));
    }
    return pol;
}

ObjectiveTrace objective_trace(ad::Tape& tape, const BatchInputs& in, const PolicyTrace& pol) {
    const int K = in.n_users, R = in.n_ris, B = in.batch;
    if (static_cast<int>(pol.f_re.size()) != K || static_cast<int>(pol.th_re.size()) != R ||
        static_cast<int>(pol.assoc.size()) != K)
        throw std::invalid_argument("objective_trace: trace does not match batch");

    // Effective channels h_k (split into real and imaginary parts, n_t x B).
    std::vector<ad::Var> h_re(K), h_im(K);
    for (int k = 0; k < K; ++k) {
        ad::Var assoc_k = pol.assoc[k];
        for (int i = 0; i < R; ++i) {
            ad::Var tr = ad::sub(ad::batched_matvec(in.ct_re[k][i], pol.th_re[i]),
                                 ad::batched_matvec(in.ct_im[k][i], pol.th_im[i]));
            ad::Var ti = ad::add(ad::batched_matvec(in.ct_re[k][i], pol.th_im[i]),
                                 ad::batched_matvec(in.ct_im[k][i], pol.th_re[i]));
            ad::Var u_row = ad::rows(assoc_k, i, 1);
            ad::Var wre = ad::mul_rowvec(tr, u_row);
            ad::Var wim = ad::mul_rowvec(ti, u_row);
            h_re[k] = (i == 0) ? wre : ad::add(h_re[k], wre);
            h_im[k] = (i == 0) ? wim : ad::add(h_im[k], wim);
        }
    }

    // Received powers |h_k f_j|^2, then rates.
    ad::Var wsr;
    for (int k = 0; k < K; ++k) {
        ad::Var sig, intf;
        bool have_intf = false;
        for (int j = 0; j < K; ++j) {
            ad::Var re = ad::sub(ad::colsum(ad::mul(h_re[k], pol.f_re[j])),
                                 ad::colsum(ad::mul(h_im[k], pol.f_im[j])));
            ad::Var im = ad::add(ad::colsum(ad::mul(h_re[k], pol.f_im[j])),
                                 ad::colsum(ad::mul(h_im[k], pol.f_re[j])));
            ad::Var pw = ad::add(ad::mul(re, re), ad::mul(im, im));
            if (j == k) {
                sig = pw;
            } else {
                intf = have_intf ? ad::add(intf, pw) : pw;
                have_intf = true;
            }
        }
        ad::Var denom = have_intf ? ad::add_scalar(intf, in.noise_scaled)
                                  : tape.constant(ad::Mat::Constant(1, B, in.noise_scaled));
        ad::Var rate = ad::scale(ad::log1p_(ad::mul(sig, ad::inv_(denom))), 1.0 / std::log(2.0));
        ad::Var term = ad::scale(rate, in.weights(k));
        wsr = (k == 0) ? term : ad::add(wsr, term);
    }

    // Association penalty against the distance-rule labels.
    ad::Var ce;
    for (int k = 0; k < K; ++k) {
        ad::Var lg = ad::log_clamped(pol.assoc[k], kScoreFloor);
        ad::Var term = ad::scale(ad::colsum(ad::mul(tape.constant(in.label[k]), lg)), -1.0);
        ce = (k == 0) ? term : ad::add(ce, term);
    }

    ObjectiveTrace obj;
    obj.wsr = wsr;
    obj.ce = ce;
    return obj;
}

ad::Var loss_trace(ad::Tape& tape, const ObjectiveTrace& obj, double eta) {
    const Eigen::Index B = tape.value(obj.wsr).cols();
    ad::Var util = ad::sub(obj.wsr, ad::scale(obj.ce, eta));
    return ad::scale(ad::total_sum(util), -1.0 / static_cast<double>(B));
}

Solution solution_from_trace(const ad::Tape& tape, const PolicyTrace& pol, const BatchInputs& in,
                             int column) {
    if (column < 0 || column >= in.batch)
        throw std::invalid_argument("solution_from_trace: column out of range");
    const int K = in.n_users, R = in.n_ris;
    Solution sol;
    sol.f.resize(in.n_t, K);
    for (int k = 0; k < K; ++k) {
        const ad::Mat& re = tape.value(pol.f_re[k]);
        const ad::Mat& im = tape.value(pol.f_im[k]);
        for (int n = 0; n < in.n_t; ++n)
            sol.f(n, k) = std::complex<double>(re(n, column), im(n, column));
    }
    sol.theta.resize(R);
    for (int i = 0; i < R; ++i) {
        const ad::Mat& re = tape.value(pol.th_re[i]);
        const ad::Mat& im = tape.value(pol.th_im[i]);
        sol.theta[i].resize(in.m);
        for (int e = 0; e < in.m; ++e)
            sol.theta[i](e) = std::complex<double>(re(e, column), im(e, column));
    }
    Eigen::MatrixXd soft(K, R);
    for (int k = 0; k < K; ++k) soft.row(k) = tape.value(pol.assoc[k]).col(column).transpose();
    sol.u = harden_association(soft);
    return sol;
}

}  // namespace risgnn
