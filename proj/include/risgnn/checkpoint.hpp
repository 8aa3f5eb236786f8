// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "risgnn/training.hpp"

namespace risgnn {

// Self-describing binary checkpoint: magic, a JSON header with the model
// kind, scenario, and tensor table, then the tensor payload as doubles.
// Round trips are bit exact.
void save_checkpoint(Policy& policy, const SystemConfig& cfg, const std::string& path);

struct LoadedPolicy {
    std::unique_ptr<Policy> policy;
    SystemConfig cfg;
    GraphSpec spec;
};

// Reconstructs the policy saved at `path`; throws DataError on malformed or
// mismatched files.
LoadedPolicy load_checkpoint(const std::string& path);

}  // namespace risgnn
