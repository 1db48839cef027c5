#pragma once

// Margin-producing models over the one-hot Kronecker feature mapping
// Phi(x, y) = onehot(y) (x) psi(x): a linear classifier (psi = identity) and
// a one-hidden-layer ReLU MLP (psi = relu(W1^T x + b1)). The final-layer
// coefficients mu are a single vector of k * dim(psi) reals laid out in k
// contiguous class blocks, so f(x)_y = psi(x) . mu[block y].

#include "mgce/loss_core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mgce {

enum class ModelKind { linear, mlp };

struct Model {
    ModelKind kind = ModelKind::linear;
    int d = 0;      // raw input dimension
    int k = 0;      // class count
    int hidden = 0; // hidden units (0 for linear)

    std::vector<double> w1; // d x hidden, row-major (empty for linear)
    std::vector<double> b1; // hidden (empty for linear)
    std::vector<double> mu; // k * feature_dim(), class blocks

    int feature_dim() const { return kind == ModelKind::linear ? d : hidden; }
    int param_dim_mu() const { return k * feature_dim(); }
};

// Hidden weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases and mu
// zero; identical model for identical seed.
Model make_linear_model(int d, int k);
Model make_mlp_model(int d, int k, int hidden, std::uint64_t seed);

// psi(x): the raw features (linear) or the hidden activation (MLP).
std::vector<double> feature_vector(const Model& model,
                                   const std::vector<double>& x);

// Phi(x, y): block-sparse vector of length k * feature_dim() with psi(x) in
// block y and zeros elsewhere.
std::vector<double> feature_map(const Model& model,
                                const std::vector<double>& x, int y);

MarginVector forward_margins(const Model& model,
                             const std::vector<double>& x);

struct ModelGrads {
    std::vector<double> mu;
    std::vector<double> w1;
    std::vector<double> b1;

    void resize_like(const Model& model);
    void zero();
};

// Chain a margin-space gradient back to the parameters, accumulating into
// grads (callers zero it per batch). ReLU'(0) := 0.
void backward(const Model& model, const std::vector<double>& x,
              const std::vector<double>& margin_grad, ModelGrads& grads);

// Batched forward/backward used by the trainer. Rows of x are samples.
struct ForwardBatch {
    std::size_t batch = 0;
    std::vector<double> pre;     // batch x hidden pre-activations (MLP only)
    std::vector<double> psi;     // batch x feature_dim
    std::vector<double> margins; // batch x k
};

void forward_batch(const Model& model, const double* x, std::size_t batch,
                   ForwardBatch& out);

// margin_grads is batch x k; gradients are summed over the batch.
void backward_batch(const Model& model, const double* x,
                    const ForwardBatch& fwd, const double* margin_grads,
                    ModelGrads& grads);

struct SgdState {
    std::vector<double> v_mu;
    std::vector<double> v_w1;
    std::vector<double> v_b1;

    void resize_like(const Model& model);
};

// Global-norm clip to clip_norm over all parameter gradients, then
// v <- momentum * v + g and theta <- theta - lr * v.
void sgd_step(Model& model, const ModelGrads& grads, SgdState& state,
              double lr, double momentum, double clip_norm);

// Text checkpoint, 17 significant digits per value.
void save_checkpoint(const Model& model, double beta, const std::string& path);
Model load_checkpoint(const std::string& path, double* beta_out = nullptr);

} // namespace mgce
