#include "mgce/trainer.hpp"

#include "mgce/baselines.hpp"
#include "mgce/gradients.hpp"
#include "mgce/kernels.hpp"
#include "mgce/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace mgce {

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "mgce") return LossKind::mgce;
    if (name == "gce") return LossKind::gce;
    if (name == "ce") return LossKind::ce;
    if (name == "mae") return LossKind::mae;
    throw std::invalid_argument("unknown loss '" + name +
                                "' (expected mgce, gce, ce or mae)");
}

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::mgce: return "mgce";
        case LossKind::gce: return "gce";
        case LossKind::ce: return "ce";
        case LossKind::mae: return "mae";
    }
    return "?";
}

std::string to_string(ModelKind kind) {
    return kind == ModelKind::linear ? "linear" : "mlp";
}

void RunConfig::validate() const {
    if (!(beta >= 1.0)) throw std::invalid_argument("beta must be >= 1");
    if (!(lambda0 >= 0.0)) throw std::invalid_argument("lambda0 must be >= 0");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("momentum must lie in [0, 1)");
    if (!(clip_norm > 0.0))
        throw std::invalid_argument("clip_norm must be positive");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw std::invalid_argument("val_fraction must lie in [0, 1)");
    if (!(noise_eta >= 0.0 && noise_eta <= 1.0))
        throw std::invalid_argument("noise_eta must lie in [0, 1]");
    if (model == ModelKind::mlp && hidden < 1)
        throw std::invalid_argument("hidden must be >= 1 for the mlp model");
    if (!(bisect_tol > 0.0))
        throw std::invalid_argument("bisect_tol must be positive");
}

double RunConfig::effective_beta() const {
    if (loss == LossKind::ce) return LossParams{}.ce_threshold;
    if (loss == LossKind::mae) return 1.0;
    return beta;
}

namespace {

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Streaming moments of the block-sparse feature map Phi(x, y): only class
// block y is nonzero, so per-class sums over psi suffice.
struct PhiMoments {
    int k = 0, f = 0;
    std::size_t n = 0;
    std::vector<double> sum;   // k * f
    std::vector<double> sumsq; // k * f

    void reset(int k_, int f_) {
        k = k_;
        f = f_;
        n = 0;
        sum.assign(static_cast<std::size_t>(k) * f, 0.0);
        sumsq.assign(static_cast<std::size_t>(k) * f, 0.0);
    }
    void add(const double* psi, int y) {
        double* s = sum.data() + static_cast<std::size_t>(y) * f;
        double* q = sumsq.data() + static_cast<std::size_t>(y) * f;
        for (int j = 0; j < f; ++j) {
            s[j] += psi[j];
            q[j] += psi[j] * psi[j];
        }
        ++n;
    }
    UncertaintyStats finalize(double lambda0, double delta) const {
        UncertaintyStats st;
        st.m = k * f;
        st.lambda0 = lambda0;
        st.delta = delta;
        st.tau.resize(st.m);
        st.s.resize(st.m);
        st.lambda.resize(st.m);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (int j = 0; j < st.m; ++j) {
            st.tau[j] = sum[j] * inv_n;
            const double var = sumsq[j] * inv_n - st.tau[j] * st.tau[j];
            st.s[j] = std::sqrt(std::max(var, 0.0));
            st.lambda[j] = lambda0 * st.s[j];
        }
        return st;
    }
};

struct SampleEval {
    double loss = 0.0;
    double phi = 0.0;
};

// Loss value, margin gradient (written to grad, length k) and the implicit
// potential used by the objective decomposition.
SampleEval loss_and_margin_grad(LossKind loss, const MarginVector& f, int y,
                                const LossParams& params, double* grad) {
    SampleEval out;
    const int k = static_cast<int>(f.size());
    switch (loss) {
        case LossKind::mgce:
        case LossKind::mae: {
            const ImplicitPotential pot = solve_phi(f, params);
            out.phi = pot.phi;
            out.loss = -f[y] - pot.phi;
            const auto p = worst_case_from_margins(f, params, pot);
            for (int j = 0; j < k; ++j) grad[j] = p[j];
            grad[y] -= 1.0;
            break;
        }
        case LossKind::ce: {
            const double lse = logsumexp(f);
            out.phi = -lse;
            out.loss = lse - f[y];
            const auto s = softmax(f);
            for (int j = 0; j < k; ++j) grad[j] = s[j];
            grad[y] -= 1.0;
            break;
        }
        case LossKind::gce: {
            auto [l, g] = gce_loss_and_grad(f, y, params.beta);
            out.loss = l;
            for (int j = 0; j < k; ++j) grad[j] = g[j];
            out.phi = solve_phi(f, params).phi;
            break;
        }
    }
    return out;
}

void gather_rows(const Dataset& ds, const std::vector<std::size_t>& order,
                 std::size_t begin, std::size_t end, std::vector<double>& xb,
                 std::vector<int>& yb) {
    const int d = ds.d;
    xb.resize((end - begin) * d);
    yb.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        const std::size_t src = order[i];
        std::copy(ds.row(src), ds.row(src) + d,
                  xb.data() + (i - begin) * d);
        yb[i - begin] = ds.labels[src];
    }
}

double batched_accuracy(const Model& model, const Dataset& ds,
                        std::size_t chunk = 512) {
    if (ds.size() == 0) return 0.0;
    ForwardBatch fwd;
    std::size_t hits = 0;
    MarginVector row(model.k);
    for (std::size_t at = 0; at < ds.size(); at += chunk) {
        const std::size_t n = std::min(chunk, ds.size() - at);
        forward_batch(model, ds.row(at), n, fwd);
        for (std::size_t i = 0; i < n; ++i) {
            row.assign(fwd.margins.data() + i * model.k,
                       fwd.margins.data() + (i + 1) * model.k);
            if (argmax_lowest(row) == ds.labels[at + i]) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

} // namespace

std::vector<ProbabilityVector> predict_probs(const Model& model,
                                             const Dataset& ds, LossKind loss,
                                             double beta, double bisect_tol) {
    LossParams params;
    params.beta = loss == LossKind::mae ? 1.0 : beta;
    params.bisect_tol = bisect_tol;
    const bool use_link = loss == LossKind::mgce || loss == LossKind::mae;

    std::vector<ProbabilityVector> out;
    out.reserve(ds.size());
    ForwardBatch fwd;
    MarginVector row(model.k);
    constexpr std::size_t chunk = 512;
    for (std::size_t at = 0; at < ds.size(); at += chunk) {
        const std::size_t n = std::min(chunk, ds.size() - at);
        forward_batch(model, ds.row(at), n, fwd);
        for (std::size_t i = 0; i < n; ++i) {
            row.assign(fwd.margins.data() + i * model.k,
                       fwd.margins.data() + (i + 1) * model.k);
            out.push_back(use_link ? link_probabilities(row, params)
                                   : softmax(row));
        }
    }
    return out;
}

RunResult train_run(const RunConfig& cfg, const Dataset& train,
                    const Dataset& val, const Dataset& test,
                    const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.size() == 0) throw std::invalid_argument("empty training set");
    if (train.k < 2) throw std::invalid_argument("need at least 2 classes");

    const int d = train.d;
    const int k = train.k;
    Model model = cfg.model == ModelKind::linear
                      ? make_linear_model(d, k)
                      : make_mlp_model(d, k, cfg.hidden, cfg.seed);
    SgdState sgd;
    sgd.resize_like(model);
    ModelGrads grads;
    grads.resize_like(model);

    LossParams params;
    params.beta = cfg.effective_beta();
    params.bisect_tol = cfg.bisect_tol;
    params.validate();

    const int f_dim = model.feature_dim();
    const std::size_t n = train.size();
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

    // Initial feature-map moments at the starting parameters; refreshed each
    // epoch from the batches themselves, so lambda always reflects the
    // previous pass over the data.
    PhiMoments moments;
    moments.reset(k, f_dim);
    {
        ForwardBatch fwd;
        for (std::size_t at = 0; at < n; at += 512) {
            const std::size_t c = std::min<std::size_t>(512, n - at);
            forward_batch(model, train.row(at), c, fwd);
            for (std::size_t i = 0; i < c; ++i)
                moments.add(fwd.psi.data() + i * f_dim, train.labels[at + i]);
        }
    }
    UncertaintyStats stats = moments.finalize(cfg.lambda0, 0.05);

    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    RunResult result;
    result.best_epoch = 0;
    double best_val = -1.0;

    std::vector<double> xb;
    std::vector<int> yb;
    std::vector<double> margin_grads;
    ForwardBatch fwd;
    MarginVector frow(k);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        PhiMoments epoch_moments;
        epoch_moments.reset(k, f_dim);
        double loss_sum = 0.0;
        double phi_sum = 0.0;

        for (std::size_t at = 0; at < n; at += batch) {
            const std::size_t b = std::min(batch, n - at);
            gather_rows(train, order, at, at + b, xb, yb);
            forward_batch(model, xb.data(), b, fwd);

            margin_grads.assign(b * k, 0.0);
            for (std::size_t i = 0; i < b; ++i) {
                frow.assign(fwd.margins.data() + i * k,
                            fwd.margins.data() + (i + 1) * k);
                const SampleEval ev = loss_and_margin_grad(
                    cfg.loss, frow, yb[i], params,
                    margin_grads.data() + i * k);
                loss_sum += ev.loss;
                phi_sum += ev.phi;
                epoch_moments.add(fwd.psi.data() + i * f_dim, yb[i]);
            }

            // The batch gradient is the sum of the per-sample gradients,
            // each of which carries the full regularizer term; the norm clip
            // then bounds the resulting step.
            grads.zero();
            backward_batch(model, xb.data(), fwd, margin_grads.data(), grads);
            for (int j = 0; j < model.param_dim_mu(); ++j)
                grads.mu[j] += static_cast<double>(b) * stats.lambda[j] *
                               sign0(model.mu[j]);
            sgd_step(model, grads, sgd, cfg.lr, cfg.momentum, cfg.clip_norm);
        }

        stats = epoch_moments.finalize(cfg.lambda0, 0.05);

        RunRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        double v = 0.0;
        for (int j = 0; j < model.param_dim_mu(); ++j)
            v += -stats.tau[j] * model.mu[j] +
                 stats.lambda[j] * std::abs(model.mu[j]);
        rec.v_beta = v - phi_sum / static_cast<double>(n);
        rec.val_accuracy = batched_accuracy(model, val);
        rec.test_accuracy = batched_accuracy(model, test);
        if (test.size() > 0) {
            const auto probs =
                predict_probs(model, test, cfg.loss, cfg.beta, cfg.bisect_tol);
            rec.sce = sce(probs, test.labels);
            rec.mae_risk = mae_risk(probs, test.labels);
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();

        const bool improved =
            val.size() > 0 ? rec.val_accuracy > best_val : true;
        if (improved) {
            best_val = rec.val_accuracy;
            result.best_model = model;
            result.best_epoch = epoch;
        }
        result.records.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }

    result.final_model = model;
    if (!cfg.out_dir.empty()) write_run_artifacts(cfg, result, cfg.out_dir);
    return result;
}

namespace {

nlohmann::json record_json(const RunRecord& rec, bool deterministic) {
    return {{"epoch", rec.epoch},
            {"train_loss", rec.train_loss},
            {"val_accuracy", rec.val_accuracy},
            {"test_accuracy", rec.test_accuracy},
            {"sce", rec.sce},
            {"mae_risk", rec.mae_risk},
            {"v_beta", rec.v_beta},
            // wall time is zeroed under determinism so reruns are
            // byte-identical
            {"wall_ms", deterministic ? 0.0 : rec.wall_ms}};
}

nlohmann::json config_json(const RunConfig& cfg) {
    return {{"loss", to_string(cfg.loss)},
            {"beta", cfg.beta},
            {"lambda0", cfg.lambda0},
            {"lr", cfg.lr},
            {"momentum", cfg.momentum},
            {"clip_norm", cfg.clip_norm},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"val_fraction", cfg.val_fraction},
            {"noise_eta", cfg.noise_eta},
            {"seed", cfg.seed},
            {"model", to_string(cfg.model)},
            {"hidden", cfg.hidden},
            {"bisect_tol", cfg.bisect_tol},
            {"deterministic", cfg.deterministic},
            {"standardize", cfg.standardize},
            {"dataset", cfg.dataset},
            {"out_dir", cfg.out_dir}};
}

} // namespace

void write_run_artifacts(const RunConfig& cfg, const RunResult& result,
                         const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream os(fs::path(out_dir) / "run.jsonl");
        if (!os) throw std::runtime_error("cannot write to " + out_dir);
        for (const auto& rec : result.records)
            os << record_json(rec, cfg.deterministic).dump() << '\n';
    }

    const RunRecord& best = result.records.at(result.best_epoch - 1);
    const RunRecord& fin = result.records.back();
    nlohmann::json summary = {
        {"config", config_json(cfg)},
        {"best",
         {{"epoch", best.epoch},
          {"val_accuracy", best.val_accuracy},
          {"test_accuracy", best.test_accuracy},
          {"sce", best.sce},
          {"mae_risk", best.mae_risk},
          {"v_beta", best.v_beta}}},
        {"final",
         {{"epoch", fin.epoch},
          {"val_accuracy", fin.val_accuracy},
          {"test_accuracy", fin.test_accuracy},
          {"sce", fin.sce},
          {"mae_risk", fin.mae_risk},
          {"v_beta", fin.v_beta}}}};
    {
        std::ofstream os(fs::path(out_dir) / "summary.json");
        os << summary.dump(2) << '\n';
    }

    save_checkpoint(result.best_model, cfg.effective_beta(),
                    (fs::path(out_dir) / "best.ckpt").string());
}

} // namespace mgce
