// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "risgnn/training.hpp"
#include "risgnn/wmmse.hpp"

namespace risgnn {

// Unstructured benchmark network: one dense stack from the concatenation of
// every link feature straight to all raw decision outputs, trained with the
// same objective and heads as the graph policy.
class FlatPolicy : public Policy {
  public:
    FlatPolicy(GraphSpec spec, std::vector<int> hidden_layers, std::uint64_t seed);
    std::string kind() const override { return "flat"; }
    void for_each_param(
        const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) override;
    PolicyTrace trace(ad::Tape& tape, const BatchInputs& in,
                      std::vector<ad::Var>& leaves) override;
    const GraphSpec& spec() const { return spec_; }
    const std::vector<int>& hidden_layers() const { return hidden_layers_; }

  private:
    GraphSpec spec_;
    std::vector<int> hidden_layers_;
    std::vector<Eigen::MatrixXd> w_, b_;
};

enum class FlatSize { small, large };

// Builds a flat policy sized against a reference parameter count: `small`
// roughly matches it, `large` exceeds four times it.
std::unique_ptr<FlatPolicy> make_flat_policy(const GraphSpec& spec, FlatSize size,
                                             std::size_t reference_params, std::uint64_t seed);

struct ExhaustiveResult {
    Solution solution;
    double utility = 0.0;  // weighted sum rate of the best assignment
    int evaluated = 0;     // assignments tried
};

// Tries every user-to-reflector assignment, running the alternating
// beamformer design for each, and keeps the best. Ties keep the assignment
// that comes first when user indices are read as digits (lowest reflector
// indices win). Throws std::invalid_argument when n_ris^n_users > 4096.
ExhaustiveResult exhaustive_association(const ChannelRealization& real, const SystemConfig& cfg,
                                        const std::vector<Eigen::RowVectorXcd>& theta,
                                        const WmmseConfig& wcfg = {});

}  // namespace risgnn
