// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "risgnn/baselines.hpp"
#include "risgnn/checkpoint.hpp"
#include "risgnn/errors.hpp"

using risgnn::DataError;
using risgnn::FlatSize;
using risgnn::GnnConfig;
using risgnn::GnnPolicy;
using risgnn::GraphSpec;
using risgnn::SystemConfig;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("risgnn_ckpt_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

SystemConfig small_cfg() {
    SystemConfig cfg;
    cfg.n_t = 2;
    cfg.ris_geometry = risgnn::ArrayGeometry::upa(2, 1);
    return cfg;
}

}  // namespace

TEST_CASE("graph policies round-trip bit exactly") {
    TempDir dir;
    const SystemConfig cfg = small_cfg();
    GnnConfig gnn;
    gnn.hidden = 8;
    gnn.blocks = 3;
    auto policy = GnnPolicy::make(cfg, gnn, 77);
    risgnn::save_checkpoint(*policy, cfg, dir.file("m.ckpt"));

    risgnn::LoadedPolicy loaded = risgnn::load_checkpoint(dir.file("m.ckpt"));
    CHECK(loaded.policy->kind() == "hetgnn");
    CHECK(loaded.spec.hidden == 8);
    CHECK(loaded.spec.blocks == 3);
    CHECK(loaded.cfg.n_t == cfg.n_t);

    std::vector<Eigen::MatrixXd> a, b;
    std::vector<std::string> names_a, names_b;
    policy->for_each_param([&](const std::string& n, Eigen::MatrixXd& m) {
        names_a.push_back(n);
        a.push_back(m);
    });
    loaded.policy->for_each_param([&](const std::string& n, Eigen::MatrixXd& m) {
        names_b.push_back(n);
        b.push_back(m);
    });
    REQUIRE(a.size() == b.size());
    CHECK(names_a == names_b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);  // bit exact
}

TEST_CASE("the fixed-association variant survives the round trip") {
    TempDir dir;
    const SystemConfig cfg = small_cfg();
    GnnConfig gnn;
    gnn.hidden = 8;
    gnn.blocks = 2;
    auto policy = GnnPolicy::make(cfg, gnn, 3);
    policy->set_fixed_association(true);
    risgnn::save_checkpoint(*policy, cfg, dir.file("m.ckpt"));
    risgnn::LoadedPolicy loaded = risgnn::load_checkpoint(dir.file("m.ckpt"));
    CHECK(loaded.policy->kind() == "hetgnn-fixed");
    auto* gnn_policy = dynamic_cast<GnnPolicy*>(loaded.policy.get());
    REQUIRE(gnn_policy != nullptr);
    CHECK(gnn_policy->fixed_association());
}

TEST_CASE("flat policies round-trip with their layer shapes") {
    TempDir dir;
    const SystemConfig cfg = small_cfg();
    GnnConfig gnn;
    gnn.hidden = 8;
    gnn.blocks = 2;
    const GraphSpec spec = risgnn::make_graph_spec(cfg, gnn);
    auto policy = risgnn::make_flat_policy(spec, FlatSize::large, 2000, 5);
    risgnn::save_checkpoint(*policy, cfg, dir.file("f.ckpt"));

    risgnn::LoadedPolicy loaded = risgnn::load_checkpoint(dir.file("f.ckpt"));
    CHECK(loaded.policy->kind() == "flat");
    auto* flat = dynamic_cast<risgnn::FlatPolicy*>(loaded.policy.get());
    REQUIRE(flat != nullptr);
    CHECK(flat->hidden_layers() == policy->hidden_layers());
    CHECK(flat->parameter_count() == policy->parameter_count());
}

TEST_CASE("saving twice produces identical bytes") {
    TempDir dir;
    const SystemConfig cfg = small_cfg();
    GnnConfig gnn;
    gnn.hidden = 8;
    gnn.blocks = 2;
    auto policy = GnnPolicy::make(cfg, gnn, 9);
    risgnn::save_checkpoint(*policy, cfg, dir.file("a.ckpt"));
    risgnn::save_checkpoint(*policy, cfg, dir.file("b.ckpt"));
    std::ifstream fa(dir.file("a.ckpt"), std::ios::binary);
    std::ifstream fb(dir.file("b.ckpt"), std::ios::binary);
    const std::string ca((std::istreambuf_iterator<char>(fa)), {});
    const std::string cb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(ca == cb);
    CHECK(!ca.empty());
}

TEST_CASE("evaluation is unchanged across a save/load cycle") {
    TempDir dir;
    const SystemConfig cfg = small_cfg();
    GnnConfig gnn;
    gnn.hidden = 8;
    gnn.blocks = 2;
    risgnn::Dataset::generate(cfg, 10, 6, 13, dir.file("ds"));
    const risgnn::Dataset data = risgnn::Dataset::open(dir.file("ds"));
    const GraphSpec spec = risgnn::make_graph_spec(cfg, gnn);

    auto policy = GnnPolicy::make(cfg, gnn, 31);
    const risgnn::EvalMetrics before = risgnn::evaluate(*policy, data, cfg, spec, 4);
    risgnn::save_checkpoint(*policy, cfg, dir.file("m.ckpt"));
    risgnn::LoadedPolicy loaded = risgnn::load_checkpoint(dir.file("m.ckpt"));
    const risgnn::EvalMetrics after =
        risgnn::evaluate(*loaded.policy, data, loaded.cfg, loaded.spec, 4);
    CHECK(after.mean_utility == doctest::Approx(before.mean_utility).epsilon(1e-6));
    CHECK(after.samples == before.samples);
}

TEST_CASE("missing and malformed checkpoints raise data errors") {
    TempDir dir;
    CHECK_THROWS_AS((void)risgnn::load_checkpoint(dir.file("missing.ckpt")), DataError);

    {
        std::ofstream bad(dir.file("bad.ckpt"), std::ios::binary);
        bad << "not a checkpoint at all";
    }
    CHECK_THROWS_AS((void)risgnn::load_checkpoint(dir.file("bad.ckpt")), DataError);
}

TEST_CASE("a truncated payload is rejected") {
    TempDir dir;
    const SystemConfig cfg = small_cfg();
    GnnConfig gnn;
    gnn.hidden = 8;
    gnn.blocks = 2;
    auto policy = GnnPolicy::make(cfg, gnn, 9);
    risgnn::save_checkpoint(*policy, cfg, dir.file("t.ckpt"));
    std::filesystem::resize_file(dir.file("t.ckpt"),
                                 std::filesystem::file_size(dir.file("t.ckpt")) - 8);
    CHECK_THROWS_AS((void)risgnn::load_checkpoint(dir.file("t.ckpt")), DataError);
}

TEST_CASE("trailing bytes are rejected") {
    TempDir dir;
    const SystemConfig cfg = small_cfg();
    GnnConfig gnn;
    gnn.hidden = 8;
    gnn.blocks = 2;
    auto policy = GnnPolicy::make(cfg, gnn, 9);
    risgnn::save_checkpoint(*policy, cfg, dir.file("x.ckpt"));
    {
        std::ofstream app(dir.file("x.ckpt"), std::ios::binary | std::ios::app);
        app << "junk";
    }
    CHECK_THROWS_AS((void)risgnn::load_checkpoint(dir.file("x.ckpt")), DataError);
}
