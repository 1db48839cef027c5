#pragma once

// SGD training loop shared by every loss: minibatch gradients over margins,
// momentum + global-norm clipping, per-epoch metrics, best-validation-epoch
// model selection, and run artifacts (run.jsonl / summary.json / best.ckpt).

#include "mgce/data.hpp"
#include "mgce/models.hpp"
#include "mgce/objective.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mgce {

enum class LossKind { mgce, gce, ce, mae };

LossKind loss_kind_from_string(const std::string& name); // throws on unknown
std::string to_string(LossKind kind);
std::string to_string(ModelKind kind);

struct RunConfig {
    LossKind loss = LossKind::mgce;
    double beta = 1.4;
    double lambda0 = 1e-5;
    double lr = 0.001;
    double momentum = 0.9;
    double clip_norm = 5.0;
    int epochs = 150;
    int batch_size = 128;
    double val_fraction = 0.1;
    double noise_eta = 0.0;
    std::uint64_t seed = 0;
    ModelKind model = ModelKind::mlp;
    int hidden = 1024;
    double bisect_tol = 1e-4;
    bool deterministic = true;
    bool standardize = true; // z-score features with training moments
    std::string dataset;
    std::string out_dir; // empty: no artifacts written

    void validate() const; // throws std::invalid_argument on bad fields

    // beta actually used by the loss: ce_threshold for CE, 1 for MAE.
    double effective_beta() const;
};

struct RunRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    double sce = 0.0;
    double mae_risk = 0.0;
    double v_beta = 0.0;
    double wall_ms = 0.0;
};

struct RunResult {
    std::vector<RunRecord> records;
    Model final_model;
    Model best_model;
    int best_epoch = 0; // ties toward the earliest epoch
};

using EpochCallback = std::function<void(const RunRecord&)>;

// Trains on `train`, selects on `val`, reports on `test`. Datasets must be
// standardized by the caller. If cfg.out_dir is non-empty the artifacts are
// written there (the directory is created if missing).
RunResult train_run(const RunConfig& cfg, const Dataset& train,
                    const Dataset& val, const Dataset& test,
                    const EpochCallback& on_epoch = {});

// Link probabilities for each row under the loss's natural link: the
// beta-tailored link for mgce/mae, softmax for ce/gce.
std::vector<ProbabilityVector> predict_probs(const Model& model,
                                             const Dataset& ds,
                                             LossKind loss, double beta,
                                             double bisect_tol = 1e-4);

// summary.json / run.jsonl writers (used by train_run and the beta sweep).
void write_run_artifacts(const RunConfig& cfg, const RunResult& result,
                         const std::string& out_dir);

} // namespace mgce
