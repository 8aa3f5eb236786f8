// SPDX-License-Identifier: Apache-2.0
#include "risgnn/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "risgnn/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "record files are little-endian; this platform is not");

namespace risgnn {

namespace {

constexpr char kMagic[8] = {'M', 'R', 'D', 'S', '0', '0', '0', '1'};
constexpr int kFormatVersion = 1;

// Record layout, all doubles:
//   user positions     (n_users * 2, user-major x,y)
//   distances          (n_users * n_ris, user-major)
//   g[i]               per RIS, column-major (m x n_t), re/im interleaved
//   h[i][k]            per RIS then user, m entries, re/im interleaved
void serialize_record(const ChannelRealization& real, std::vector<double>& out) {
    out.clear();
    for (const auto& p : real.user_positions) {
        out.push_back(p.x());
        out.push_back(p.y());
    }
    for (int k = 0; k < real.n_users(); ++k)
        for (int i = 0; i < real.n_ris(); ++i) out.push_back(real.distances(i, k));
    for (const auto& g : real.g)
        for (Eigen::Index n = 0; n < g.cols(); ++n)
            for (Eigen::Index e = 0; e < g.rows(); ++e) {
                out.push_back(g(e, n).real());
                out.push_back(g(e, n).imag());
            }
    for (const auto& per_ris : real.h)
        for (const auto& row : per_ris)
            for (Eigen::Index e = 0; e < row.cols(); ++e) {
                out.push_back(row(e).real());
                out.push_back(row(e).imag());
            }
}

ChannelRealization deserialize_record(const std::vector<double>& in, const SystemConfig& cfg) {
    const int n_users = cfg.n_users;
    const int n_ris = cfg.n_ris;
    const int m = cfg.ris_elements();
    const int n_t = cfg.n_t;
    std::size_t pos = 0;
    auto take = [&in, &pos]() { return in.at(pos++); };

    ChannelRealization real;
    real.user_positions.resize(n_users);
    for (auto& p : real.user_positions) {
        p.x() = take();
        p.y() = take();
    }
    real.ris_positions = cfg.ris_positions;
    real.distances.resize(n_ris, n_users);
    for (int k = 0; k < n_users; ++k)
        for (int i = 0; i < n_ris; ++i) real.distances(i, k) = take();
    real.g.resize(n_ris);
    for (auto& g : real.g) {
        g.resize(m, n_t);
        for (int n = 0; n < n_t; ++n)
            for (int e = 0; e < m; ++e) {
                const double re = take();
                const double im = take();
                g(e, n) = {re, im};
            }
    }
    real.h.assign(n_ris, std::vector<Eigen::RowVectorXcd>(n_users));
    for (auto& per_ris : real.h)
        for (auto& row : per_ris) {
            row.resize(m);
            for (int e = 0; e < m; ++e) {
                const double re = take();
                const double im = take();
                row(e) = {re, im};
            }
        }
    real.cascaded.assign(n_ris, std::vector<Eigen::MatrixXcd>(n_users));
    for (int i = 0; i < n_ris; ++i)
        for (int k = 0; k < n_users; ++k)
            real.cascaded[i][k] = real.h[i][k].transpose().asDiagonal() * real.g[i];
    return real;
}

}  // namespace

std::size_t dataset_record_doubles(const SystemConfig& cfg) {
    const std::size_t k = cfg.n_users, r = cfg.n_ris, m = cfg.ris_elements(), nt = cfg.n_t;
    return k * 2 + k * r + r * m * nt * 2 + r * k * m * 2;
}

void Dataset::generate(const SystemConfig& cfg, int samples, int train_count, std::uint64_t seed,
                       const std::string& path) {
    cfg.validate();
    if (samples < 1) throw std::invalid_argument("dataset: need at least one sample");
    if (train_count < 0 || train_count > samples)
        throw std::invalid_argument("dataset: train_count out of range");

    const std::string record_path = path + ".mrds";
    const std::string header_path = path + ".json";

    std::ofstream rec(record_path, std::ios::binary | std::ios::trunc);
    if (!rec) throw DataError("dataset: cannot open " + record_path + " for writing");
    rec.write(kMagic, sizeof(kMagic));

    const Rng master(seed);
    std::vector<double> buf;
    for (int i = 0; i < samples; ++i) {
        Rng sample_rng = master.derive(static_cast<std::uint64_t>(i));
        ChannelRealization real = build_realization(cfg, sample_rng);
        serialize_record(real, buf);
        rec.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(double)));
    }
    if (!rec) throw DataError("dataset: write failed on " + record_path);
    rec.close();

    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["kind"] = "mrds";
    header["samples"] = samples;
    header["train_count"] = train_count;
    header["seed"] = seed;
    header["record_doubles"] = dataset_record_doubles(cfg);
    header["config"] = nlohmann::json::parse(to_json(cfg));
    std::ofstream hdr(header_path, std::ios::trunc);
    if (!hdr) throw DataError("dataset: cannot open " + header_path + " for writing");
    hdr << header.dump(2) << "\n";
    if (!hdr) throw DataError("dataset: write failed on " + header_path);
}

Dataset Dataset::open(const std::string& path) {
    const std::string record_path = path + ".mrds";
    const std::string header_path = path + ".json";

    std::ifstream hdr(header_path);
    if (!hdr) throw DataError("dataset: missing header " + header_path);
    nlohmann::json header;
    try {
        hdr >> header;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("dataset: bad header " + header_path + ": " + e.what());
    }

    Dataset ds;
    try {
        if (header.at("format_version").get<int>() != kFormatVersion)
            throw DataError("dataset: unsupported format version in " + header_path);
        if (header.at("kind").get<std::string>() != "mrds")
            throw DataError("dataset: unsupported kind in " + header_path);
        ds.cfg_ = system_config_from_json(header.at("config").dump());
        ds.samples_ = header.at("samples").get<int>();
        ds.train_count_ = header.at("train_count").get<int>();
        ds.seed_ = header.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("dataset: bad header " + header_path + ": " + e.what());
    }
    if (ds.samples_ < 1 || ds.train_count_ < 0 || ds.train_count_ > ds.samples_)
        throw DataError("dataset: inconsistent sample counts in " + header_path);
    ds.record_doubles_ = dataset_record_doubles(ds.cfg_);
    if (header.contains("record_doubles") &&
        header.at("record_doubles").get<std::size_t>() != ds.record_doubles_)
        throw DataError("dataset: record size does not match the config in " + header_path);
    ds.record_path_ = record_path;

    std::ifstream rec(record_path, std::ios::binary | std::ios::ate);
    if (!rec) throw DataError("dataset: missing records " + record_path);
    const auto file_size = static_cast<std::uint64_t>(rec.tellg());
    const std::uint64_t expect =
        sizeof(kMagic) +
        static_cast<std::uint64_t>(ds.samples_) * ds.record_doubles_ * sizeof(double);
    if (file_size != expect)
        throw DataError("dataset: " + record_path + " is truncated or oversized");
    rec.seekg(0);
    char magic[sizeof(kMagic)];
    rec.read(magic, sizeof(magic));
    if (!rec || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("dataset: bad magic in " + record_path);

    ds.cache_.resize(static_cast<std::size_t>(ds.samples_));
    return ds;
}

void Dataset::load_record(int index) const {
    if (!stream_.is_open()) {
        stream_.open(record_path_, std::ios::binary);
        if (!stream_) throw DataError("dataset: cannot reopen " + record_path_);
    }
    stream_.clear();
    const std::uint64_t offset =
        sizeof(kMagic) + static_cast<std::uint64_t>(index) * record_doubles_ * sizeof(double);
    stream_.seekg(static_cast<std::streamoff>(offset));
    std::vector<double> buf(record_doubles_);
    stream_.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!stream_) throw DataError("dataset: short read in " + record_path_);
    cache_[static_cast<std::size_t>(index)] =
        std::make_unique<ChannelRealization>(deserialize_record(buf, cfg_));
}

const ChannelRealization& Dataset::sample(int index) const {
    if (index < 0 || index >= samples_)
        throw std::invalid_argument("dataset: sample index out of range");
    auto& slot = cache_[static_cast<std::size_t>(index)];
    if (!slot) load_record(index);
    return *slot;
}

void Dataset::preload() const {
    for (int i = 0; i < samples_; ++i) sample(i);
}

std::vector<int> Dataset::train_indices() const {
    std::vector<int> idx(static_cast<std::size_t>(train_count_));
    for (int i = 0; i < train_count_; ++i) idx[static_cast<std::size_t>(i)] = i;
    return idx;
}

std::vector<int> Dataset::validation_indices() const {
    std::vector<int> idx(static_cast<std::size_t>(validation_count()));
    for (int i = 0; i < validation_count(); ++i) idx[static_cast<std::size_t>(i)] = train_count_ + i;
    return idx;
}

}  // namespace risgnn
