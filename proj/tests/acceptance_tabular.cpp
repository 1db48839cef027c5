// Dataset-scale acceptance: accuracy/calibration targets on the tabular
// benchmarks and the convergence-speed comparison against GCE.
//
// Needs the converted datasets under MGCE_DATA_DIR (see tools/fetch_data.py).
// MGCE_ACCEPT_PROFILE=full runs the 150-epoch protocol with the headline
// thresholds; the default smoke profile runs 50 epochs and relaxes every
// accuracy threshold by 2 points (and the SCE-gap threshold to 13 points).

#include "mgce/data.hpp"
#include "mgce/trainer.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

using namespace mgce;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
    std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name,
                detail.c_str());
    if (!pass) ++failures;
}

std::string data_root() {
    const char* env = std::getenv("MGCE_DATA_DIR");
    return env && *env ? env : "data";
}

bool full_profile() {
    const char* env = std::getenv("MGCE_ACCEPT_PROFILE");
    return env && std::string(env) == "full";
}

struct Task {
    Dataset train, val, test;
};

// standardize=false reproduces the tabular protocol on raw feature scales;
// z-scoring shrinks the effective step of lr=0.001 and underconverges within
// the epoch budget.
Task load_task(const std::string& name, double eta, std::uint64_t seed,
               bool standardize) {
    const fs::path base = fs::path(data_root()) / name;
    Dataset full = load_csv((base / "train.csv").string());
    Dataset test = load_csv((base / "test.csv").string());
    align_labels(full, test);
    if (standardize) mgce::standardize(full, {&test});
    if (eta > 0.0) inject_symmetric_noise(full, eta, seed);
    auto [tr, va] = split(full, {0.1, seed});
    return {std::move(tr), std::move(va), std::move(test)};
}

RunRecord best_record(const RunResult& r) {
    return r.records.at(r.best_epoch - 1);
}

// Short sweep over the default grid, selected by validation accuracy.
double cross_validate_beta(const Task& task, RunConfig cfg,
                           int sweep_epochs) {
    const double grid[] = {1.05, 1.18, 1.4, 1.8, 2.5, 4.0, 7.0, 11.0};
    cfg.epochs = sweep_epochs;
    double best_beta = grid[0], best_val = -1.0;
    for (double beta : grid) {
        cfg.beta = beta;
        const auto r = train_run(cfg, task.train, task.val, task.test);
        const double val = best_record(r).val_accuracy;
        std::fprintf(stderr, "  sweep beta %-5g val %.4f\n", beta, val);
        if (val > best_val) {
            best_val = val;
            best_beta = beta;
        }
    }
    std::fprintf(stderr, "  selected beta %g\n", best_beta);
    return best_beta;
}

RunConfig base_config(int epochs) {
    RunConfig cfg;
    cfg.loss = LossKind::mgce;
    cfg.model = ModelKind::mlp;
    cfg.hidden = 1024;
    cfg.lr = 0.001;
    cfg.momentum = 0.9;
    cfg.clip_norm = 5.0;
    cfg.batch_size = 128;
    cfg.epochs = epochs;
    cfg.seed = 1;
    return cfg;
}

void criterion_tabular(int epochs, double relax) {
    struct Spec {
        const char* name;
        double eta;
        double target;     // accuracy threshold, percent
        bool standardize;  // adult mixes one-hot with wide-range numerics
        int sweep_epochs;
    };
    const Spec specs[] = {{"mnist", 0.0, 96.3, false, 5},
                          {"adult", 0.0, 84.5, true, 10},
                          {"letter", 0.0, 89.0, false, 10}};

    for (const Spec& s : specs) {
        const Task task = load_task(s.name, s.eta, 1, s.standardize);
        RunConfig cfg = base_config(epochs);
        cfg.dataset = s.name;
        cfg.beta = cross_validate_beta(task, cfg, s.sweep_epochs);
        const auto rec =
            best_record(train_run(cfg, task.train, task.val, task.test));
        const double acc = 100.0 * rec.test_accuracy;
        const double target = s.target - relax;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "test acc %.2f%% (>= %.1f%%), beta %g, best epoch %d",
                      acc, target, cfg.beta, rec.epoch);
        char name[64];
        std::snprintf(name, sizeof name, "%s eta=0 accuracy", s.name);
        report(name, acc >= target, buf);
    }

    // noisy MNIST: accuracy and the calibration gap against CE
    {
        const Task task = load_task("mnist", 0.4, 1, false);
        RunConfig cfg = base_config(epochs);
        cfg.dataset = "mnist";
        cfg.noise_eta = 0.4;
        cfg.beta = cross_validate_beta(task, cfg, 5);
        const auto mgce_rec =
            best_record(train_run(cfg, task.train, task.val, task.test));

        RunConfig ce_cfg = cfg;
        ce_cfg.loss = LossKind::ce;
        const auto ce_rec =
            best_record(train_run(ce_cfg, task.train, task.val, task.test));

        const double acc = 100.0 * mgce_rec.test_accuracy;
        const double acc_target = 94.0 - relax;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "test acc %.2f%% (>= %.1f%%), beta %g", acc,
                      acc_target, cfg.beta);
        report("mnist eta=0.4 accuracy", acc >= acc_target, buf);

        // The published calibration numbers this gap refers to (10.53 vs
        // 39.46 for k = 10) are only reachable when the per-class terms are
        // summed; our metric averages them, so its values are 1/k of that
        // scale. The gap is therefore compared on the class-summed scale.
        const double k = static_cast<double>(task.test.k);
        const double gap = 100.0 * k * (ce_rec.sce - mgce_rec.sce);
        const double gap_target = relax > 0.0 ? 13.0 : 15.0;
        std::snprintf(buf, sizeof buf,
                      "sce (class-summed) mgce %.2f vs ce %.2f, gap %.2f "
                      "(>= %.1f points)",
                      100.0 * k * mgce_rec.sce, 100.0 * k * ce_rec.sce, gap,
                      gap_target);
        report("mnist eta=0.4 calibration gap", gap >= gap_target, buf);
    }
}

void criterion_convergence_speed() {
    double mgce_sum = 0.0, gce_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Task task = load_task("letter", 0.0, seed, false);
        RunConfig cfg = base_config(20);
        cfg.dataset = "letter";
        cfg.beta = 1.4;
        cfg.seed = seed;
        mgce_sum += train_run(cfg, task.train, task.val, task.test)
                        .records.back()
                        .test_accuracy;
        cfg.loss = LossKind::gce;
        gce_sum += train_run(cfg, task.train, task.val, task.test)
                       .records.back()
                       .test_accuracy;
    }
    const double mgce_acc = 100.0 * mgce_sum / 5.0;
    const double gce_acc = 100.0 * gce_sum / 5.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "epoch-20 test acc: mgce %.2f%% vs gce %.2f%% "
                  "(gap >= 1 point, 5 seeds)",
                  mgce_acc, gce_acc);
    report("letter convergence speed", mgce_acc - gce_acc >= 1.0, buf);
}

} // namespace

int main() {
    if (!fs::exists(fs::path(data_root()) / "mnist" / "train.csv")) {
        std::printf("FAIL  datasets missing under %s — run "
                    "tools/fetch_data.py first\n",
                    data_root().c_str());
        return 1;
    }
    const bool full = full_profile();
    std::printf("profile: %s\n", full ? "full (150 epochs)"
                                      : "smoke (50 epochs, thresholds -2)");
    criterion_tabular(full ? 150 : 50, full ? 0.0 : 2.0);
    criterion_convergence_speed();
    if (failures) {
        std::printf("%d criterion(s) FAILED\n", failures);
        return 1;
    }
    std::printf("all tabular criteria passed\n");
    return 0;
}
