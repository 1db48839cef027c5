// Command-line harness: training runs, beta sweeps, evaluation, gradient
// checks, phi inspection, bisection benchmarks, and synthetic data.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.

#include "mgce/baselines.hpp"
#include "mgce/data.hpp"
#include "mgce/gradients.hpp"
#include "mgce/metrics.hpp"
#include "mgce/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string data_root() {
    const char* env = std::getenv("MGCE_DATA_DIR");
    return env && *env ? env : "data";
}

struct DataPaths {
    std::string train;
    std::string test;
};

DataPaths resolve_dataset(const std::string& name_or_dir) {
    fs::path base = fs::is_directory(name_or_dir)
                        ? fs::path(name_or_dir)
                        : fs::path(data_root()) / name_or_dir;
    DataPaths p{(base / "train.csv").string(), (base / "test.csv").string()};
    if (!fs::exists(p.train))
        throw std::runtime_error("dataset '" + name_or_dir + "': missing " +
                                 p.train);
    if (!fs::exists(p.test))
        throw std::runtime_error("dataset '" + name_or_dir + "': missing " +
                                 p.test);
    return p;
}

struct LoadedData {
    mgce::Dataset train; // standardized, noise applied
    mgce::Dataset val;
    mgce::Dataset test;
};

LoadedData prepare_data(const mgce::RunConfig& cfg) {
    const DataPaths paths = resolve_dataset(cfg.dataset);
    mgce::Dataset full = mgce::load_csv(paths.train);
    mgce::Dataset test = mgce::load_csv(paths.test);
    mgce::align_labels(full, test);
    if (cfg.standardize) mgce::standardize(full, {&test});
    if (cfg.noise_eta > 0.0)
        mgce::inject_symmetric_noise(full, cfg.noise_eta, cfg.seed);
    auto [tr, va] = mgce::split(full, {cfg.val_fraction, cfg.seed});
    return {std::move(tr), std::move(va), std::move(test)};
}

// CLI11 only processes a config file attached to the top-level command, so
// the run subcommands apply theirs by hand: file values fill options the
// command line left unset, which gives flags precedence over the file.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find_first_of("#;");
            hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " +
                                        std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        CLI::Option* op = cmd->get_option_no_throw("--" + key);
        if (op == nullptr)
            throw std::invalid_argument("config: line " +
                                        std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        if (op->count() > 0) continue;
        try {
            op->add_result(trim(line.substr(eq + 1)));
            op->run_callback();
        } catch (const CLI::Error& e) {
            throw std::invalid_argument("config: line " +
                                        std::to_string(lineno) + ": " +
                                        e.what());
        }
    }
}

void add_run_options(CLI::App* cmd, mgce::RunConfig& cfg, std::string& loss,
                     std::string& model, std::string& config_path) {
    cmd->add_option("--data", cfg.dataset,
                    "dataset name under the data root, or a directory with "
                    "train.csv/test.csv")
        ->required();
    cmd->add_option("--loss", loss, "mgce | gce | ce | mae")
        ->default_val("mgce");
    cmd->add_option("--beta", cfg.beta, "beta >= 1")->default_val(1.4);
    cmd->add_option("--lambda0", cfg.lambda0)->default_val(1e-5);
    cmd->add_option("--lr", cfg.lr)->default_val(0.001);
    cmd->add_option("--momentum", cfg.momentum)->default_val(0.9);
    cmd->add_option("--clip-norm", cfg.clip_norm)->default_val(5.0);
    cmd->add_option("--epochs", cfg.epochs)->default_val(150);
    cmd->add_option("--batch-size", cfg.batch_size)->default_val(128);
    cmd->add_option("--val-fraction", cfg.val_fraction)->default_val(0.1);
    cmd->add_option("--noise-eta", cfg.noise_eta,
                    "symmetric label-noise rate on train+val")
        ->default_val(0.0);
    cmd->add_option("--seed", cfg.seed)->default_val(0);
    cmd->add_option("--model", model, "linear | mlp")->default_val("mlp");
    cmd->add_option("--hidden", cfg.hidden)->default_val(1024);
    cmd->add_option("--bisect-tol", cfg.bisect_tol)->default_val(1e-4);
    cmd->add_flag("--standardize,!--no-standardize", cfg.standardize,
                  "z-score features using training-set moments")
        ->default_val(true);
    cmd->add_flag("--deterministic,!--no-deterministic", cfg.deterministic,
                  "zero wall_ms in run.jsonl so reruns are byte-identical")
        ->default_val(true);
    cmd->add_option("--out", cfg.out_dir, "artifact directory");
    cmd->add_option("--config", config_path,
                    "key = value file; CLI flags take precedence");
}

void finalize_run_config(mgce::RunConfig& cfg, const std::string& loss,
                         const std::string& model) {
    cfg.loss = mgce::loss_kind_from_string(loss);
    if (model == "linear")
        cfg.model = mgce::ModelKind::linear;
    else if (model == "mlp")
        cfg.model = mgce::ModelKind::mlp;
    else
        throw std::invalid_argument("unknown model '" + model +
                                    "' (expected linear or mlp)");
    cfg.validate();
}

void print_epoch(const mgce::RunRecord& r) {
    std::fprintf(stderr,
                 "epoch %3d  loss %.5f  val %.4f  test %.4f  sce %.4f  "
                 "v_beta %.5f  (%.0f ms)\n",
                 r.epoch, r.train_loss, r.val_accuracy, r.test_accuracy,
                 r.sce, r.v_beta, r.wall_ms);
}

int cmd_train(mgce::RunConfig cfg) {
    const LoadedData data = prepare_data(cfg);
    const mgce::RunResult result =
        mgce::train_run(cfg, data.train, data.val, data.test, print_epoch);
    const auto& best = result.records.at(result.best_epoch - 1);
    json out = {{"best_epoch", best.epoch},
                {"val_accuracy", best.val_accuracy},
                {"test_accuracy", best.test_accuracy},
                {"sce", best.sce},
                {"mae_risk", best.mae_risk},
                {"v_beta", best.v_beta}};
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

int cmd_sweep_beta(mgce::RunConfig cfg, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("empty beta grid");
    const LoadedData data = prepare_data(cfg);
    const std::string out_root = cfg.out_dir;

    json rows = json::array();
    int best_idx = 0;
    double best_val = -1.0;
    std::vector<mgce::RunRecord> bests;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        mgce::RunConfig sub = cfg;
        sub.beta = grid[i];
        if (!out_root.empty()) {
            char tag[32];
            std::snprintf(tag, sizeof tag, "beta_%g", grid[i]);
            sub.out_dir = (fs::path(out_root) / tag).string();
        }
        std::fprintf(stderr, "--- beta = %g ---\n", grid[i]);
        const auto result =
            mgce::train_run(sub, data.train, data.val, data.test, print_epoch);
        const auto& best = result.records.at(result.best_epoch - 1);
        bests.push_back(best);
        rows.push_back({{"beta", grid[i]},
                        {"best_epoch", best.epoch},
                        {"val_accuracy", best.val_accuracy},
                        {"test_accuracy", best.test_accuracy},
                        {"sce", best.sce},
                        {"mae_risk", best.mae_risk},
                        {"v_beta", best.v_beta}});
        if (best.val_accuracy > best_val) {
            best_val = best.val_accuracy;
            best_idx = static_cast<int>(i);
        }
    }

    json out = {{"grid", rows},
                {"selected_beta", grid[best_idx]},
                {"selected",
                 {{"val_accuracy", bests[best_idx].val_accuracy},
                  {"test_accuracy", bests[best_idx].test_accuracy},
                  {"sce", bests[best_idx].sce}}}};
    std::cout << out.dump(2) << '\n';
    if (!out_root.empty()) {
        fs::create_directories(out_root);
        std::ofstream os(fs::path(out_root) / "sweep.json");
        os << out.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_eval(const std::string& ckpt, const std::string& dataset,
             const std::string& loss_name) {
    const mgce::LossKind loss = mgce::loss_kind_from_string(loss_name);
    double beta = 1.4;
    const mgce::Model model = mgce::load_checkpoint(ckpt, &beta);

    const DataPaths paths = resolve_dataset(dataset);
    mgce::Dataset train = mgce::load_csv(paths.train);
    mgce::Dataset test = mgce::load_csv(paths.test);
    mgce::align_labels(train, test);
    mgce::standardize(train, {&test});
    if (test.k != model.k || test.d != model.d)
        throw std::runtime_error("checkpoint shape does not match dataset");

    const auto probs = mgce::predict_probs(model, test, loss, beta);
    json out = {{"checkpoint", ckpt},
                {"dataset", dataset},
                {"loss", loss_name},
                {"beta", beta},
                {"n", test.size()},
                {"accuracy", mgce::accuracy(probs, test.labels)},
                {"sce", mgce::sce(probs, test.labels)},
                {"mae_risk", mgce::mae_risk(probs, test.labels)}};
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

int cmd_gradcheck(double beta, int k, int d, int trials, std::uint64_t seed) {
    const double threshold = beta <= 1.05 ? 1e-4 : 1e-5;
    const auto margins =
        mgce::gradcheck_margin_loss(beta, k, trials, seed, threshold);
    const auto params =
        mgce::gradcheck_param(beta, k, d, trials, seed + 1, threshold);
    json out = {{"beta", beta},
                {"k", k},
                {"d", d},
                {"trials", trials},
                {"threshold", threshold},
                {"margin_grad_max_rel_err", margins.max_rel_err},
                {"param_grad_max_rel_err", params.max_rel_err},
                {"pass", margins.pass && params.pass}};
    std::cout << out.dump(2) << '\n';
    return margins.pass && params.pass ? kExitOk : kExitNumeric;
}

int cmd_phi(double beta, const std::string& margins_arg, double tol) {
    mgce::MarginVector f;
    std::size_t pos = 0;
    while (pos <= margins_arg.size()) {
        const std::size_t comma = margins_arg.find(',', pos);
        const std::string tok = margins_arg.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            f.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw std::invalid_argument("--margins: cannot parse '" + tok +
                                        "' at position " +
                                        std::to_string(f.size() + 1));
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }

    mgce::LossParams params;
    params.beta = beta;
    params.bisect_tol = tol;
    const auto pot = mgce::solve_phi(f, params);
    const auto h = mgce::link_probabilities(f, params, pot);
    const auto p = mgce::worst_case_from_margins(f, params, pot);

    const auto [blo, bhi] = params.ce_mode()
                                ? std::pair{pot.phi, pot.phi}
                                : mgce::phi_bracket(f, beta);
    const double width = bhi - blo;
    const std::uint32_t bound =
        width < tol ? 0
                    : static_cast<std::uint32_t>(
                          std::ceil(std::log2(width / tol))) +
                          1;
    if (pot.iterations > bound)
        throw std::domain_error("iteration bound exceeded");

    json out = {{"beta", beta},
                {"margins", f},
                {"phi", pot.phi},
                {"iterations", pot.iterations},
                {"iteration_bound", bound},
                {"initial_bracket", {blo, bhi}},
                {"final_bracket", {pot.bracket_lo, pot.bracket_hi}},
                {"h", h},
                {"p", p}};
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

int cmd_bench(const std::vector<double>& betas, const std::vector<int>& ks,
              int batch, int repeats, double tol) {
    std::printf("%10s %6s %14s %12s\n", "beta", "k", "median_ns", "mean_iter");
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (double beta : betas) {
        for (int k : ks) {
            std::vector<mgce::MarginVector> cases(batch,
                                                  mgce::MarginVector(k));
            for (auto& f : cases)
                for (double& v : f) v = dist(rng);
            mgce::LossParams params;
            params.beta = beta;
            params.bisect_tol = tol;

            std::vector<double> per_solve_ns;
            double iter_sum = 0.0;
            for (int r = 0; r < repeats; ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                std::uint64_t iters = 0;
                double sink = 0.0;
                for (const auto& f : cases) {
                    const auto pot = mgce::solve_phi(f, params);
                    sink += pot.phi;
                    iters += pot.iterations;
                }
                const auto t1 = std::chrono::steady_clock::now();
                asm volatile("" ::"r"(sink));
                per_solve_ns.push_back(
                    std::chrono::duration<double, std::nano>(t1 - t0)
                        .count() /
                    batch);
                iter_sum += static_cast<double>(iters) / batch;
            }
            std::sort(per_solve_ns.begin(), per_solve_ns.end());
            std::printf("%10g %6d %14.0f %12.1f\n", beta, k,
                        per_solve_ns[per_solve_ns.size() / 2],
                        iter_sum / repeats);
        }
    }
    return kExitOk;
}

int cmd_synth(int k, int d, int n, int test_n, double separation,
              std::uint64_t seed, const std::string& out) {
    // One draw shared by both files so train and test use the same mixture.
    const mgce::Dataset pool =
        mgce::synth_gaussian_mixture(k, d, n + test_n, separation, seed);
    auto take = [&](int begin, int end) {
        mgce::Dataset out = pool;
        out.features.assign(pool.row(begin), pool.row(end));
        out.labels.assign(pool.labels.begin() + begin,
                          pool.labels.begin() + end);
        return out;
    };
    const mgce::Dataset train = take(0, n);
    const mgce::Dataset test = take(n, n + test_n);
    fs::create_directories(out);
    mgce::save_csv(train, (fs::path(out) / "train.csv").string());
    mgce::save_csv(test, (fs::path(out) / "test.csv").string());
    std::fprintf(stderr, "wrote %s/{train,test}.csv (k=%d d=%d n=%d/%d)\n",
                 out.c_str(), k, d, n, test_n);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimax generalized cross-entropy: training and tools"};
    app.require_subcommand(1);

    mgce::RunConfig cfg;
    std::string loss = "mgce";
    std::string model = "mlp";

    std::string config_path;

    auto* train = app.add_subcommand("train", "train one model");
    add_run_options(train, cfg, loss, model, config_path);

    auto* sweep = app.add_subcommand(
        "sweep-beta", "train per beta on a grid, select by validation");
    std::vector<double> grid = {1.05, 1.18, 1.4, 1.8, 2.5, 4.0, 7.0, 11.0};
    add_run_options(sweep, cfg, loss, model, config_path);
    sweep->add_option("--grid", grid, "beta grid")->delimiter(',');

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ckpt, eval_data, eval_loss = "mgce";
    eval->add_option("--ckpt", ckpt)->required();
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--loss", eval_loss, "link used for probabilities")
        ->default_val("mgce");

    auto* gradcheck =
        app.add_subcommand("gradcheck", "finite-difference gradient check");
    double gc_beta = 2.0;
    int gc_k = 5, gc_d = 8, gc_trials = 100;
    std::uint64_t gc_seed = 0;
    gradcheck->add_option("--beta", gc_beta)->default_val(2.0);
    gradcheck->add_option("--k", gc_k)->default_val(5);
    gradcheck->add_option("--d", gc_d)->default_val(8);
    gradcheck->add_option("--trials", gc_trials)->default_val(100);
    gradcheck->add_option("--seed", gc_seed)->default_val(0);

    auto* phi = app.add_subcommand("phi", "solve and print the potential");
    double phi_beta = 2.0, phi_tol = 1e-4;
    std::string phi_margins;
    phi->add_option("--beta", phi_beta)->required();
    phi->add_option("--margins", phi_margins, "comma-separated reals")
        ->required();
    phi->add_option("--tol", phi_tol)->default_val(1e-4);

    auto* bench = app.add_subcommand("bench-bisection", "time the solver");
    std::vector<double> bench_betas = {1.05, 1.4, 2.0, 5.0};
    std::vector<int> bench_ks = {2, 10, 26, 100};
    int bench_batch = 1000, bench_repeats = 5;
    double bench_tol = 1e-4;
    bench->add_option("--betas", bench_betas)->delimiter(',');
    bench->add_option("--ks", bench_ks)->delimiter(',');
    bench->add_option("--batch", bench_batch)->default_val(1000);
    bench->add_option("--repeats", bench_repeats)->default_val(5);
    bench->add_option("--tol", bench_tol)->default_val(1e-4);

    auto* synth =
        app.add_subcommand("synth", "write a Gaussian-mixture dataset");
    int sy_k = 2, sy_d = 10, sy_n = 2000, sy_test_n = 1000;
    double sy_sep = 2.0;
    std::uint64_t sy_seed = 0;
    std::string sy_out;
    synth->add_option("--k", sy_k)->default_val(2);
    synth->add_option("--d", sy_d)->default_val(10);
    synth->add_option("--n", sy_n)->default_val(2000);
    synth->add_option("--test-n", sy_test_n)->default_val(1000);
    synth->add_option("--separation", sy_sep)->default_val(2.0);
    synth->add_option("--seed", sy_seed)->default_val(0);
    synth->add_option("--out", sy_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (train->parsed() || sweep->parsed()) {
            apply_config_file(train->parsed() ? train : sweep, config_path);
            finalize_run_config(cfg, loss, model);
            return train->parsed() ? cmd_train(cfg) : cmd_sweep_beta(cfg, grid);
        }
        if (eval->parsed()) return cmd_eval(ckpt, eval_data, eval_loss);
        if (gradcheck->parsed())
            return cmd_gradcheck(gc_beta, gc_k, gc_d, gc_trials, gc_seed);
        if (phi->parsed()) return cmd_phi(phi_beta, phi_margins, phi_tol);
        if (bench->parsed())
            return cmd_bench(bench_betas, bench_ks, bench_batch,
                             bench_repeats, bench_tol);
        if (synth->parsed())
            return cmd_synth(sy_k, sy_d, sy_n, sy_test_n, sy_sep, sy_seed,
                             sy_out);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::out_of_range& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
