// SPDX-License-Identifier: Apache-2.0
#include "risgnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "risgnn/errors.hpp"
#include "risgnn/system_core.hpp"

namespace risgnn {

std::size_t Policy::parameter_count() {
    std::size_t n = 0;
    for_each_param([&n](const std::string&, Eigen::MatrixXd& m) { n += m.size(); });
    return n;
}

std::unique_ptr<GnnPolicy> GnnPolicy::make(const SystemConfig& cfg, const GnnConfig& gnn,
                                           std::uint64_t seed) {
    GraphSpec spec = make_graph_spec(cfg, gnn);
    Rng rng(seed);
    ModelParams params = init_params(spec, rng);
    return std::make_unique<GnnPolicy>(std::move(spec), std::move(params));
}

void GnnPolicy::for_each_param(
    const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
    params_.for_each(fn);
}

PolicyTrace GnnPolicy::trace(ad::Tape& tape, const BatchInputs& in,
                             std::vector<ad::Var>& leaves) {
    TraceParams tp = register_params(tape, params_);
    leaves = tp.vars;
    PolicyTrace pol = hetgnn_trace(tape, in, tp, spec_);
    if (fixed_association_)
        for (int k = 0; k < in.n_users; ++k) pol.assoc[k] = tape.constant(in.label[k]);
    return pol;
}

namespace {

// Adam moments per tensor, with the weight-decay term applied to the
// parameter directly rather than folded into the gradient.
struct AdamState {
    std::vector<Eigen::MatrixXd> m, v;
    int step = 0;
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-12;

    void init(Policy& policy) {
        policy.for_each_param([this](const std::string&, Eigen::MatrixXd& p) {
            m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
            v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        });
    }

    void update(Policy& policy, const std::vector<Eigen::MatrixXd>& grads, double lr, double wd) {
        ++step;
        const double c1 = 1.0 - std::pow(kBeta1, step);
        const double c2 = 1.0 - std::pow(kBeta2, step);
        std::size_t i = 0;
        policy.for_each_param([&](const std::string&, Eigen::MatrixXd& p) {
            const Eigen::MatrixXd& g = grads.at(i);
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g.cwiseProduct(g);
            const Eigen::ArrayXXd mhat = m[i].array() / c1;
            const Eigen::ArrayXXd vhat = v[i].array() / c2;
            p.array() -= lr * (mhat / (vhat.sqrt() + kEps) + wd * p.array());
            ++i;
        });
    }
};

std::vector<const ChannelRealization*> gather(const Dataset& data, const std::vector<int>& idx,
                                              std::size_t begin, std::size_t end) {
    std::vector<const ChannelRealization*> out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) out.push_back(&data.sample(idx[i]));
    return out;
}

// Hard-decision weighted sum rate averaged over samples, optionally with the
// power budget overridden.
double hard_utility(Policy& policy, const std::vector<const ChannelRealization*>& reals,
                    const SystemConfig& cfg, const GraphSpec& spec, int batch_size,
                    std::optional<double> p_override = std::nullopt) {
    SystemConfig eval_cfg = cfg;
    GraphSpec eval_spec = spec;
    if (p_override) {
        eval_cfg.p_max = *p_override;
        eval_spec.p_max = *p_override;
    }
    double total = 0.0;
    for (std::size_t at = 0; at < reals.size(); at += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(reals.size(), at + static_cast<std::size_t>(batch_size));
        std::vector<const ChannelRealization*> chunk(reals.begin() + static_cast<long>(at),
                                                     reals.begin() + static_cast<long>(end));
        BatchInputs in = make_batch(chunk, eval_spec);
        ad::Tape tape;
        std::vector<ad::Var> leaves;
        PolicyTrace pol = policy.trace(tape, in, leaves);
        for (int b = 0; b < in.batch; ++b) {
            Solution sol = solution_from_trace(tape, pol, in, b);
            total += weighted_sum_rate(*chunk[static_cast<std::size_t>(b)], sol, eval_cfg);
        }
    }
    return total / static_cast<double>(reals.size());
}

}  // namespace

double mean_hard_utility(Policy& policy, const std::vector<const ChannelRealization*>& reals,
                         const SystemConfig& cfg, const GraphSpec& spec, int batch_size) {
    if (reals.empty()) throw std::invalid_argument("mean_hard_utility: no samples");
    return hard_utility(policy, reals, cfg, spec, batch_size);
}

TrainResult train(Policy& policy, const Dataset& data, const SystemConfig& cfg,
                  const GraphSpec& spec, const TrainConfig& tc, const std::string& history_path) {
    if (tc.epochs < 1) throw std::invalid_argument("train: epochs must be positive");
    if (tc.batch_size < 1) throw std::invalid_argument("train: batch size must be positive");
    if (!(tc.learning_rate >= 0.0)) throw std::invalid_argument("train: negative learning rate");
    if (data.train_count() < 1) throw std::invalid_argument("train: empty training split");
    if (data.validation_count() < 1) throw std::invalid_argument("train: empty validation split");

    std::ofstream log;
    if (!history_path.empty()) {
        log.open(history_path, std::ios::trunc);
        if (!log) throw DataError("train: cannot open history log " + history_path);
    }

    const std::vector<int> train_idx = data.train_indices();
    const std::vector<int> val_idx = data.validation_indices();
    std::vector<const ChannelRealization*> val_reals = gather(data, val_idx, 0, val_idx.size());

    AdamState adam;
    adam.init(policy);
    Rng shuffle_rng(tc.seed);

    int pre_epochs = tc.pretrain_epochs;
    if (pre_epochs < 0) pre_epochs = std::max(1, tc.epochs / 2);
    pre_epochs = std::min(pre_epochs, tc.epochs);

    const double p0 = dbm_to_watts(tc.reference_p_dbm);
    const bool at_reference = std::abs(cfg.p_max - p0) <= 1e-12 * std::max(cfg.p_max, p0);

    TrainResult result;
    double eta = 0.0;
    bool eta_set = false;
    std::vector<double> recent_losses;

    std::vector<int> order = train_idx;
    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        const int stage = (epoch <= pre_epochs) ? 1 : 2;
        if (stage == 2 && !eta_set) {
            if (tc.eta_override) {
                eta = *tc.eta_override;
            } else if (at_reference) {
                eta = 1.0;
            } else {
                const double now = hard_utility(policy, val_reals, cfg, spec, tc.batch_size);
                double ref = tc.reference_utility
                                 ? *tc.reference_utility
                                 : hard_utility(policy, val_reals, cfg, spec, tc.batch_size, p0);
                if (!(ref > 0.0)) ref = std::max(now, 1e-300);
                eta = now / ref;
            }
            eta_set = true;
            recent_losses.clear();
        }

        // Fisher-Yates pass driven by the training stream.
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform() * double(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }

        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(tc.batch_size)) {
            const std::size_t end =
                std::min(order.size(), at + static_cast<std::size_t>(tc.batch_size));
            BatchInputs in = make_batch(gather(data, order, at, end), spec);
            ad::Tape tape;
            std::vector<ad::Var> leaves;
            PolicyTrace pol = policy.trace(tape, in, leaves);
            ObjectiveTrace obj = objective_trace(tape, in, pol);
            ad::Var loss = loss_trace(tape, obj, (stage == 2) ? eta : 0.0);
            const double loss_val = tape.value(loss)(0, 0);
            if (!std::isfinite(loss_val)) throw NumericError("train: non-finite loss");
            tape.backward(loss);
            std::vector<Eigen::MatrixXd> grads;
            grads.reserve(leaves.size());
            for (ad::Var v : leaves) grads.push_back(tape.grad(v));
            adam.update(policy, grads, tc.learning_rate, tc.weight_decay);
            epoch_loss += loss_val;
            ++batches;
        }
        epoch_loss /= std::max(1, batches);

        recent_losses.push_back(epoch_loss);
        if (static_cast<int>(recent_losses.size()) > tc.divergence_window)
            recent_losses.erase(recent_losses.begin());
        if (static_cast<int>(recent_losses.size()) == tc.divergence_window) {
            const double first = recent_losses.front();
            const double last = recent_losses.back();
            if (std::abs(last) > tc.divergence_factor * std::max(1e-30, std::abs(first)) &&
                last > first)
                throw NumericError("train: loss diverged");
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.stage = stage;
        rec.loss = epoch_loss;
        rec.val_utility = hard_utility(policy, val_reals, cfg, spec, tc.batch_size);
        rec.eta = (stage == 2) ? eta : 0.0;
        result.history.push_back(rec);
        if (log) {
            nlohmann::json j{{"epoch", rec.epoch},
                             {"stage", rec.stage},
                             {"loss", rec.loss},
                             {"val_utility", rec.val_utility},
                             {"eta", rec.eta}};
            log << j.dump() << "\n";
        }
    }

    result.eta = eta_set ? eta : 0.0;
    result.final_val_utility =
        result.history.empty() ? 0.0 : result.history.back().val_utility;
    return result;
}

EvalMetrics evaluate(Policy& policy, const Dataset& data, const SystemConfig& cfg,
                     const GraphSpec& spec, int batch_size) {
    const std::vector<int> val_idx = data.validation_indices();
    if (val_idx.empty()) throw std::invalid_argument("evaluate: empty validation split");
    EvalMetrics metrics;
    metrics.samples = static_cast<int>(val_idx.size());
    double sum = 0.0, sum_sq = 0.0;
    int feasible = 0, agree = 0, user_total = 0;
    for (std::size_t at = 0; at < val_idx.size(); at += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(val_idx.size(), at + static_cast<std::size_t>(batch_size));
        std::vector<const ChannelRealization*> chunk = gather(data, val_idx, at, end);
        BatchInputs in = make_batch(chunk, spec);
        ad::Tape tape;
        std::vector<ad::Var> leaves;
        PolicyTrace pol = policy.trace(tape, in, leaves);
        for (int b = 0; b < in.batch; ++b) {
            const ChannelRealization& real = *chunk[static_cast<std::size_t>(b)];
            Solution sol = solution_from_trace(tape, pol, in, b);
            const double wsr = weighted_sum_rate(real, sol, cfg);
            sum += wsr;
            sum_sq += wsr * wsr;
            if (check_feasible(sol, cfg).all_pass()) ++feasible;
            for (int k = 0; k < in.n_users; ++k) {
                ++user_total;
                int nearest = 0;
                for (int i = 1; i < in.n_ris; ++i)
                    if (real.distances(i, k) < real.distances(nearest, k)) nearest = i;
                if (sol.u(k, nearest) == 1.0) ++agree;
            }
        }
    }
    const double n = static_cast<double>(metrics.samples);
    metrics.mean_utility = sum / n;
    metrics.std_utility = std::sqrt(std::max(0.0, sum_sq / n - metrics.mean_utility * metrics.mean_utility));
    metrics.feasibility_rate = static_cast<double>(feasible) / n;
    metrics.label_agreement = static_cast<double>(agree) / std::max(1, user_total);
    return metrics;
}

}  // namespace risgnn
