// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "risgnn/channel.hpp"
#include "risgnn/system_config.hpp"

namespace risgnn {

// Channel realization corpus stored as a flat binary record file plus a JSON
// sidecar describing the layout. Records are fixed-size, so access seeks.
class Dataset {
  public:
    // Draws `samples` independent realizations and writes them to
    // `path` + ".mrds" with the sidecar at `path` + ".json". Sample i is
    // reproducible from (seed, i) alone. The first train_count records form
    // the training split; the rest are validation.
    static void generate(const SystemConfig& cfg, int samples, int train_count,
                         std::uint64_t seed, const std::string& path);

    // Opens an existing corpus; throws DataError on a missing file, a header
    // mismatch, or a truncated record file.
    static Dataset open(const std::string& path);

    const SystemConfig& config() const { return cfg_; }
    int size() const { return samples_; }
    int train_count() const { return train_count_; }
    int validation_count() const { return samples_ - train_count_; }
    std::uint64_t seed() const { return seed_; }

    // Record access; loads lazily and caches.
    const ChannelRealization& sample(int index) const;
    // Reads every record up front.
    void preload() const;

    std::vector<int> train_indices() const;
    std::vector<int> validation_indices() const;

  private:
    Dataset() = default;
    void load_record(int index) const;

    SystemConfig cfg_;
    int samples_ = 0;
    int train_count_ = 0;
    std::uint64_t seed_ = 0;
    std::string record_path_;
    std::size_t record_doubles_ = 0;
    mutable std::ifstream stream_;
    mutable std::vector<std::unique_ptr<ChannelRealization>> cache_;
};

// Number of doubles in one serialized record for this scenario size.
std::size_t dataset_record_doubles(const SystemConfig& cfg);

}  // namespace risgnn
