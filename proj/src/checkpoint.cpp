// SPDX-License-Identifier: Apache-2.0
#include "risgnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "risgnn/baselines.hpp"
#include "risgnn/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoints are little-endian; this platform is not");

namespace risgnn {

namespace {

constexpr char kMagic[8] = {'R', 'G', 'C', 'K', '0', '0', '0', '1'};
constexpr int kFormatVersion = 1;

}  // namespace

void save_checkpoint(Policy& policy, const SystemConfig& cfg, const std::string& path) {
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["kind"] = policy.kind();
    header["config"] = nlohmann::json::parse(to_json(cfg));

    if (auto* g = dynamic_cast<GnnPolicy*>(&policy)) {
        header["model"] = {{"hidden", g->spec().hidden}, {"blocks", g->spec().blocks}};
    } else if (auto* f = dynamic_cast<FlatPolicy*>(&policy)) {
        header["model"] = {{"hidden_layers", f->hidden_layers()}};
    } else {
        throw std::invalid_argument("checkpoint: unknown policy type");
    }

    nlohmann::json tensors = nlohmann::json::array();
    std::vector<const Eigen::MatrixXd*> mats;
    policy.for_each_param([&](const std::string& name, Eigen::MatrixXd& m) {
        tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
        mats.push_back(&m);
    });
    header["tensors"] = std::move(tensors);

    const std::string text = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("checkpoint: cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Eigen::MatrixXd* m : mats)
        out.write(reinterpret_cast<const char*>(m->data()),
                  static_cast<std::streamsize>(sizeof(double) * m->size()));
    if (!out) throw DataError("checkpoint: write failed on " + path);
}

LoadedPolicy load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: missing file " + path);
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len > (1u << 26)) throw DataError("checkpoint: bad header length in " + path);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("checkpoint: truncated header in " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint: bad header in " + path + ": " + e.what());
    }

    LoadedPolicy loaded;
    std::string kind;
    try {
        if (header.at("format_version").get<int>() != kFormatVersion)
            throw DataError("checkpoint: unsupported format version in " + path);
        kind = header.at("kind").get<std::string>();
        loaded.cfg = system_config_from_json(header.at("config").dump());

        if (kind == "hetgnn" || kind == "hetgnn-fixed") {
            GnnConfig gnn;
            gnn.hidden = header.at("model").at("hidden").get<int>();
            gnn.blocks = header.at("model").at("blocks").get<int>();
            auto pol = GnnPolicy::make(loaded.cfg, gnn, 0);
            if (kind == "hetgnn-fixed") pol->set_fixed_association(true);
            loaded.spec = pol->spec();
            loaded.policy = std::move(pol);
        } else if (kind == "flat") {
            auto layers = header.at("model").at("hidden_layers").get<std::vector<int>>();
            GraphSpec spec = make_graph_spec(loaded.cfg, GnnConfig{});
            auto pol = std::make_unique<FlatPolicy>(spec, layers, 0);
            loaded.spec = pol->spec();
            loaded.policy = std::move(pol);
        } else {
            throw DataError("checkpoint: unknown model kind '" + kind + "' in " + path);
        }

        const auto& tensors = header.at("tensors");
        std::size_t at = 0;
        loaded.policy->for_each_param([&](const std::string& name, Eigen::MatrixXd& m) {
            if (at >= tensors.size()) throw DataError("checkpoint: tensor table too short");
            const auto& t = tensors.at(at);
            if (t.at("name").get<std::string>() != name ||
                t.at("rows").get<Eigen::Index>() != m.rows() ||
                t.at("cols").get<Eigen::Index>() != m.cols())
                throw DataError("checkpoint: tensor '" + name + "' does not match " + path);
            in.read(reinterpret_cast<char*>(m.data()),
                    static_cast<std::streamsize>(sizeof(double) * m.size()));
            ++at;
        });
        if (!in) throw DataError("checkpoint: truncated payload in " + path);
        if (at != tensors.size()) throw DataError("checkpoint: tensor table too long in " + path);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint: bad header in " + path + ": " + e.what());
    }
    // The payload must end exactly here.
    char extra;
    in.read(&extra, 1);
    if (!in.eof()) throw DataError("checkpoint: trailing bytes in " + path);
    return loaded;
}

}  // namespace risgnn
