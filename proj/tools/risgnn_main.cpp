// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner: dataset generation, policy training, evaluation, and
// benchmark sweeps over transmit power, antenna count, and training-set size.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "risgnn/baselines.hpp"
#include "risgnn/checkpoint.hpp"
#include "risgnn/csv.hpp"
#include "risgnn/dataset.hpp"
#include "risgnn/errors.hpp"
#include "risgnn/path_loss.hpp"
#include "risgnn/svg_plot.hpp"
#include "risgnn/system_core.hpp"
#include "risgnn/training.hpp"
#include "risgnn/wmmse.hpp"

namespace {

using risgnn::DataError;
using risgnn::NumericError;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string default_out_dir() {
    const char* env = std::getenv("RISGNN_OUT_DIR");
    return env && *env ? std::string(env) : std::string(".");
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

risgnn::SystemConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return risgnn::SystemConfig{};
    try {
        return risgnn::load_system_config(path);
    } catch (const std::invalid_argument& e) {
        // Malformed file contents are a data problem, not a usage problem.
        throw DataError(e.what());
    }
}

struct TrainSpec {
    risgnn::TrainConfig tc;
    risgnn::GnnConfig gnn;
};

TrainSpec load_train_spec(const std::string& path) {
    TrainSpec ts;
    if (path.empty()) return ts;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open train config " + path);
    nlohmann::json j;
    try {
        in >> j;
        ts.tc.epochs = j.value("epochs", ts.tc.epochs);
        ts.tc.batch_size = j.value("batch_size", ts.tc.batch_size);
        ts.tc.learning_rate = j.value("learning_rate", ts.tc.learning_rate);
        ts.tc.weight_decay = j.value("weight_decay", ts.tc.weight_decay);
        ts.tc.seed = j.value("seed", ts.tc.seed);
        ts.tc.pretrain_epochs = j.value("pretrain_epochs", ts.tc.pretrain_epochs);
        if (j.contains("eta")) ts.tc.eta_override = j.at("eta").get<double>();
        if (j.contains("reference_utility"))
            ts.tc.reference_utility = j.at("reference_utility").get<double>();
        ts.tc.reference_p_dbm = j.value("reference_p_dbm", ts.tc.reference_p_dbm);
        ts.tc.divergence_factor = j.value("divergence_factor", ts.tc.divergence_factor);
        ts.tc.divergence_window = j.value("divergence_window", ts.tc.divergence_window);
        ts.gnn.hidden = j.value("hidden", ts.gnn.hidden);
        ts.gnn.blocks = j.value("blocks", ts.gnn.blocks);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad train config " + path + ": " + e.what());
    }
    return ts;
}

std::unique_ptr<risgnn::Policy> make_policy(const std::string& model,
                                            const risgnn::SystemConfig& cfg,
                                            const risgnn::GnnConfig& gnn, std::uint64_t seed) {
    const risgnn::GraphSpec spec = risgnn::make_graph_spec(cfg, gnn);
    if (model == "hetgnn" || model == "hetgnn-fixed") {
        auto pol = risgnn::GnnPolicy::make(cfg, gnn, seed);
        if (model == "hetgnn-fixed") pol->set_fixed_association(true);
        return pol;
    }
    const std::size_t ref = risgnn::GnnPolicy::make(cfg, gnn, seed)->parameter_count();
    if (model == "flat-small")
        return risgnn::make_flat_policy(spec, risgnn::FlatSize::small, ref, seed);
    if (model == "flat-large")
        return risgnn::make_flat_policy(spec, risgnn::FlatSize::large, ref, seed);
    throw CLI::ValidationError("--model", "unknown model '" + model + "'");
}

struct MeanStd {
    double mean = 0.0, stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd ms;
    if (xs.empty()) return ms;
    double sum = 0.0;
    for (double x : xs) sum += x;
    ms.mean = sum / static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - ms.mean) * (x - ms.mean);
    ms.stddev = std::sqrt(acc / static_cast<double>(xs.size()));
    return ms;
}

// Per-sample random-phase benchmark utilities on explicit samples.
std::vector<double> random_phase_utilities(const risgnn::Dataset& data,
                                           const std::vector<int>& idx, std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(idx.size());
    const risgnn::Rng master(seed);
    for (std::size_t n = 0; n < idx.size(); ++n) {
        const risgnn::ChannelRealization& real = data.sample(idx[n]);
        risgnn::Rng rng = master.derive(static_cast<std::uint64_t>(idx[n]));
        auto res = risgnn::random_phase_solution(real, data.config(), rng);
        out.push_back(risgnn::weighted_sum_rate(real, res.solution, data.config()));
    }
    return out;
}

std::vector<double> policy_utilities(risgnn::Policy& policy, const risgnn::Dataset& data,
                                     const std::vector<int>& idx, const risgnn::GraphSpec& spec,
                                     int batch_size = 128) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(idx.size(), at + static_cast<std::size_t>(batch_size));
        std::vector<const risgnn::ChannelRealization*> chunk;
        for (std::size_t n = at; n < end; ++n) chunk.push_back(&data.sample(idx[n]));
        risgnn::BatchInputs in = risgnn::make_batch(chunk, spec);
        risgnn::ad::Tape tape;
        std::vector<risgnn::ad::Var> leaves;
        risgnn::PolicyTrace pol = policy.trace(tape, in, leaves);
        for (int b = 0; b < in.batch; ++b) {
            risgnn::Solution sol = risgnn::solution_from_trace(tape, pol, in, b);
            out.push_back(risgnn::weighted_sum_rate(*chunk[static_cast<std::size_t>(b)], sol,
                                                    data.config()));
        }
    }
    return out;
}

// --- generate ---

int run_generate(const std::string& config_path, int samples, int val_count, std::uint64_t seed,
                 std::string out) {
    risgnn::SystemConfig cfg = load_config_or_default(config_path);
    if (val_count < 0) val_count = std::max(1, samples / 10);
    if (val_count >= samples)
        throw CLI::ValidationError("--val-count", "must leave at least one training sample");
    if (out.empty()) out = join_path(default_out_dir(), "dataset");
    risgnn::Dataset::generate(cfg, samples, samples - val_count, seed, out);
    std::cout << "wrote " << out << ".mrds (" << samples << " samples, " << (samples - val_count)
              << " train / " << val_count << " validation)\n";
    return 0;
}

// --- train ---

int run_train(const std::string& dataset_path, const std::string& train_config_path,
              const std::string& model, std::string out, std::string log_path,
              std::uint64_t seed_override, bool has_seed) {
    risgnn::Dataset data = risgnn::Dataset::open(dataset_path);
    TrainSpec ts = load_train_spec(train_config_path);
    if (has_seed) ts.tc.seed = seed_override;
    if (out.empty()) out = join_path(default_out_dir(), "model.ckpt");
    if (log_path.empty()) log_path = out + ".log.jsonl";

    auto policy = make_policy(model, data.config(), ts.gnn, ts.tc.seed);
    const risgnn::GraphSpec spec = risgnn::make_graph_spec(data.config(), ts.gnn);
    data.preload();
    risgnn::TrainResult result =
        risgnn::train(*policy, data, data.config(), spec, ts.tc, log_path);
    risgnn::save_checkpoint(*policy, data.config(), out);
    std::cout << "trained " << model << " (" << policy->parameter_count() << " parameters), "
              << result.history.size() << " epochs, eta=" << result.eta
              << ", final validation utility=" << result.final_val_utility << "\n"
              << "checkpoint: " << out << "\nlog: " << log_path << "\n";
    return 0;
}

// --- eval ---

int run_eval(const std::string& dataset_path, const std::string& checkpoint_path,
             const std::string& csv_path, bool oracle, int oracle_samples) {
    risgnn::Dataset data = risgnn::Dataset::open(dataset_path);
    risgnn::LoadedPolicy loaded = risgnn::load_checkpoint(checkpoint_path);
    // The checkpoint scenario must match the dataset scenario dimensions.
    const risgnn::SystemConfig& cfg = data.config();
    if (loaded.spec.n_users != cfg.n_users || loaded.spec.n_ris != cfg.n_ris ||
        loaded.spec.n_t != cfg.n_t || loaded.spec.m != cfg.ris_elements())
        throw DataError("checkpoint scenario does not match dataset scenario");

    risgnn::EvalMetrics metrics =
        risgnn::evaluate(*loaded.policy, data, cfg, loaded.spec);

    risgnn::CsvTable table;
    table.columns = {"metric", "value"};
    auto add = [&table](const std::string& name, double v) {
        table.rows.push_back({name, risgnn::format_double(v)});
    };
    add("samples", metrics.samples);
    add("mean_wsr", metrics.mean_utility);
    add("std_wsr", metrics.std_utility);
    add("feasibility_rate", metrics.feasibility_rate);
    add("violations", (1.0 - metrics.feasibility_rate) * metrics.samples);
    add("label_agreement", metrics.label_agreement);

    if (oracle) {
        auto* gnn = dynamic_cast<risgnn::GnnPolicy*>(loaded.policy.get());
        if (!gnn) throw DataError("--oracle requires a graph-network checkpoint");
        const std::vector<int> val = data.validation_indices();
        const int n = std::min<int>(oracle_samples, static_cast<int>(val.size()));
        double ratio_sum = 0.0;
        int dominated = 0;
        for (int s = 0; s < n; ++s) {
            const risgnn::ChannelRealization& real = data.sample(val[static_cast<std::size_t>(s)]);
            risgnn::Solution sol = risgnn::forward(real, gnn->spec(), gnn->params());
            if (gnn->fixed_association()) sol.u = risgnn::nearest_association(real);
            auto own = risgnn::wmmse_beamforming(real, cfg, sol.theta, sol.u);
            const double own_wsr = risgnn::weighted_sum_rate(real, own.solution, cfg);
            auto best = risgnn::exhaustive_association(real, cfg, sol.theta);
            ratio_sum += (best.utility > 0.0) ? own_wsr / best.utility : 1.0;
            if (own_wsr <= best.utility * (1.0 + 1e-9)) ++dominated;
        }
        add("oracle_samples", n);
        add("oracle_ratio", n > 0 ? ratio_sum / n : 0.0);
        add("oracle_dominance", n > 0 ? static_cast<double>(dominated) / n : 1.0);
    }

    for (const auto& row : table.rows) std::cout << row[0] << " = " << row[1] << "\n";
    if (!csv_path.empty()) {
        risgnn::write_csv(table, csv_path);
        std::cout << "report: " << csv_path << "\n";
    }
    return 0;
}

// --- sweep ---

struct SweepRow {
    double sweep_var = 0.0;
    std::string method;
    std::uint64_t seed = 0;
    double mean = 0.0, stddev = 0.0;
};

struct SweepPointResult {
    std::vector<SweepRow> rows;
};

// Applies one grid value to the scenario; sample sweeps resize the corpus.
void apply_sweep_var(const std::string& kind, double var, risgnn::SystemConfig& cfg,
                     int& n_train) {
    if (kind == "power")
        cfg.p_max = risgnn::dbm_to_watts(var);
    else if (kind == "antennas")
        cfg.n_t = static_cast<int>(var);
    else if (kind == "samples")
        n_train = static_cast<int>(var);
}

// Dataset path is keyed by what changes the records; power does not.
std::string ensure_dataset(const risgnn::SystemConfig& cfg, const std::string& kind,
                           int n_train, int val_samples, std::uint64_t seed,
                           const std::string& out_dir) {
    std::ostringstream name;
    name << "sweep_" << kind << "_nt" << cfg.n_t << "_m" << cfg.ris_elements() << "_n"
         << (n_train + val_samples) << "_s" << seed;
    const std::string ds_path = join_path(out_dir, name.str());
    if (!std::filesystem::exists(ds_path + ".json"))
        risgnn::Dataset::generate(cfg, n_train + val_samples, n_train, seed, ds_path);
    return ds_path;
}

// One grid point: open the (pre-generated) datasets, train the methods, evaluate.
SweepPointResult run_sweep_point(const std::string& kind, double var,
                                 const risgnn::SystemConfig& base, const TrainSpec& base_ts,
                                 const std::string& out_dir, int train_samples, int val_samples,
                                 std::uint64_t seed) {
    risgnn::SystemConfig cfg = base;
    TrainSpec ts = base_ts;
    ts.tc.seed = seed;
    int n_train = train_samples;
    apply_sweep_var(kind, var, cfg, n_train);

    const std::string ds_path = ensure_dataset(cfg, kind, n_train, val_samples, seed, out_dir);
    risgnn::Dataset data = risgnn::Dataset::open(ds_path);
    data.preload();
    const std::vector<int> val = data.validation_indices();

    SweepPointResult out;
    auto run_model = [&](const std::string& model) {
        auto policy = make_policy(model, cfg, ts.gnn, seed);
        const risgnn::GraphSpec spec = risgnn::make_graph_spec(cfg, ts.gnn);
        risgnn::train(*policy, data, cfg, spec, ts.tc);
        MeanStd ms = mean_std(policy_utilities(*policy, data, val, spec, ts.tc.batch_size));
        out.rows.push_back({var, model, seed, ms.mean, ms.stddev});
    };

    run_model("hetgnn");
    {
        MeanStd ms = mean_std(random_phase_utilities(data, val, seed + 1));
        out.rows.push_back({var, "wmmse-random-phase", seed, ms.mean, ms.stddev});
    }
    if (kind == "antennas") run_model("hetgnn-fixed");
    if (kind == "samples") {
        run_model("flat-small");
        run_model("flat-large");
    }
    return out;
}

int run_sweep(const std::string& kind, const std::string& config_path,
              const std::string& train_config_path, const std::string& grid_text,
              std::string out_dir, int train_samples, int val_samples, std::uint64_t seed,
              int jobs) {
    risgnn::SystemConfig base = load_config_or_default(config_path);
    TrainSpec ts = load_train_spec(train_config_path);
    if (out_dir.empty()) out_dir = default_out_dir();
    std::filesystem::create_directories(out_dir);

    std::vector<double> grid;
    {
        std::stringstream ss(grid_text);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) grid.push_back(std::stod(tok));
    }
    if (grid.empty()) throw CLI::ValidationError("--grid", "empty grid");

    // Datasets are created up front so parallel grid points only read.
    for (double var : grid) {
        risgnn::SystemConfig cfg = base;
        int n_train = train_samples;
        apply_sweep_var(kind, var, cfg, n_train);
        ensure_dataset(cfg, kind, n_train, val_samples, seed, out_dir);
    }

    std::vector<SweepPointResult> results(grid.size());
    std::size_t at = 0;
    const int workers = std::max(1, jobs);
    while (at < grid.size()) {
        const std::size_t end = std::min(grid.size(), at + static_cast<std::size_t>(workers));
        std::vector<std::future<SweepPointResult>> futs;
        for (std::size_t g = at; g < end; ++g)
            futs.push_back(std::async(std::launch::async, [&, g] {
                return run_sweep_point(kind, grid[g], base, ts, out_dir, train_samples,
                                       val_samples, seed);
            }));
        for (std::size_t g = at; g < end; ++g) results[g] = futs[g - at].get();
        at = end;
    }

    risgnn::CsvTable table;
    table.columns = {"sweep_var", "method", "seed", "mean_wsr", "std_wsr"};
    for (const auto& res : results)
        for (const auto& row : res.rows)
            table.rows.push_back({risgnn::format_double(row.sweep_var), row.method,
                                  std::to_string(row.seed), risgnn::format_double(row.mean),
                                  risgnn::format_double(row.stddev)});
    const std::string csv_path = join_path(out_dir, "sweep_" + kind + ".csv");
    risgnn::write_csv(table, csv_path);

    // Plot straight from the CSV rows.
    std::map<std::string, risgnn::PlotSeries> by_method;
    for (const auto& res : results)
        for (const auto& row : res.rows) {
            auto& s = by_method[row.method];
            s.label = row.method;
            s.x.push_back(row.sweep_var);
            s.y.push_back(row.mean);
            s.yerr.push_back(row.stddev);
        }
    risgnn::PlotSpec ps;
    ps.title = "weighted sum rate vs " + kind;
    ps.x_label = (kind == "power") ? "transmit power budget (dBm)"
                 : (kind == "antennas") ? "transmit antennas"
                                        : "training samples";
    ps.y_label = "mean validation WSR (bit/s/Hz)";
    ps.log_x = (kind == "samples");
    std::vector<risgnn::PlotSeries> series;
    for (auto& [_, s] : by_method) series.push_back(std::move(s));
    const std::string svg_path = join_path(out_dir, "sweep_" + kind + ".svg");
    risgnn::write_svg_plot(ps, series, svg_path);

    std::cout << "results: " << csv_path << "\nplot: " << svg_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-reflector downlink experiments"};
    app.require_subcommand(1);

    // generate
    std::string g_config, g_out;
    int g_samples = 0, g_val = -1;
    std::uint64_t g_seed = 1;
    auto* gen = app.add_subcommand("generate", "sample a channel realization corpus");
    gen->add_option("--config", g_config, "scenario config JSON (defaults when omitted)");
    gen->add_option("--samples", g_samples, "total realizations")
        ->required()
        ->check(CLI::PositiveNumber);
    gen->add_option("--val-count", g_val, "validation tail size (default: samples/10)");
    gen->add_option("--seed", g_seed, "generation seed");
    gen->add_option("--out", g_out, "output path base (no extension)");

    // train
    std::string t_dataset, t_tc, t_model = "hetgnn", t_out, t_log;
    std::uint64_t t_seed = 0;
    auto* tr = app.add_subcommand("train", "train a policy on a corpus");
    tr->add_option("--dataset", t_dataset, "dataset path base")->required();
    tr->add_option("--train-config", t_tc, "training config JSON");
    tr->add_option("--model", t_model, "hetgnn | hetgnn-fixed | flat-small | flat-large");
    tr->add_option("--out", t_out, "checkpoint output path");
    tr->add_option("--log", t_log, "training history JSONL path");
    auto* t_seed_opt = tr->add_option("--seed", t_seed, "overrides the train-config seed");

    // eval
    std::string e_dataset, e_ckpt, e_csv;
    bool e_oracle = false;
    int e_oracle_samples = 256;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
    ev->add_option("--dataset", e_dataset, "dataset path base")->required();
    ev->add_option("--checkpoint", e_ckpt, "checkpoint path")->required();
    ev->add_option("--csv", e_csv, "metrics report CSV path");
    ev->add_flag("--oracle", e_oracle, "compare against the exhaustive-assignment oracle");
    ev->add_option("--oracle-samples", e_oracle_samples, "oracle sample cap")
        ->check(CLI::Range(1, 256));

    // sweep
    std::string s_kind, s_config, s_tc, s_grid, s_out;
    int s_train = 10000, s_val = 1000, s_jobs = 1;
    std::uint64_t s_seed = 1;
    auto* sw = app.add_subcommand("sweep", "benchmark methods across a grid");
    sw->add_option("--kind", s_kind, "power | antennas | samples")
        ->required()
        ->check(CLI::IsMember({"power", "antennas", "samples"}));
    sw->add_option("--config", s_config, "scenario config JSON");
    sw->add_option("--train-config", s_tc, "training config JSON");
    sw->add_option("--grid", s_grid, "comma-separated grid values")->required();
    sw->add_option("--out", s_out, "output directory");
    sw->add_option("--train-samples", s_train, "training samples per point")
        ->check(CLI::PositiveNumber);
    sw->add_option("--val-samples", s_val, "validation samples per point")
        ->check(CLI::PositiveNumber);
    sw->add_option("--seed", s_seed, "sweep seed");
    sw->add_option("--jobs", s_jobs, "parallel grid points")->check(CLI::Range(1, 64));

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return run_generate(g_config, g_samples, g_val, g_seed, g_out);
        if (tr->parsed())
            return run_train(t_dataset, t_tc, t_model, t_out, t_log, t_seed,
                             t_seed_opt->count() > 0);
        if (ev->parsed()) return run_eval(e_dataset, e_ckpt, e_csv, e_oracle, e_oracle_samples);
        if (sw->parsed())
            return run_sweep(s_kind, s_config, s_tc, s_grid, s_out, s_train, s_val, s_seed,
                             s_jobs);
        std::cerr << app.help();
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
