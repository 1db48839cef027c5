#include "mgce/models.hpp"

#include "mgce/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mgce {

namespace {

void check_input_dim(const Model& model, std::size_t n) {
    if (n != static_cast<std::size_t>(model.d))
        throw std::invalid_argument("input dimension mismatch");
}

} // namespace

Model make_linear_model(int d, int k) {
    Model m;
    m.kind = ModelKind::linear;
    m.d = d;
    m.k = k;
    m.mu.assign(static_cast<std::size_t>(k) * d, 0.0);
    return m;
}

Model make_mlp_model(int d, int k, int hidden, std::uint64_t seed) {
    Model m;
    m.kind = ModelKind::mlp;
    m.d = d;
    m.k = k;
    m.hidden = hidden;
    m.w1.resize(static_cast<std::size_t>(d) * hidden);
    m.b1.assign(hidden, 0.0);
    m.mu.assign(static_cast<std::size_t>(k) * hidden, 0.0);
    const double bound = std::sqrt(6.0 / (d + hidden));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (double& w : m.w1) w = uni(rng);
    return m;
}

std::vector<double> feature_vector(const Model& model,
                                   const std::vector<double>& x) {
    check_input_dim(model, x.size());
    if (model.kind == ModelKind::linear) return x;
    std::vector<double> psi(model.hidden);
    // pre = W1^T x + b1
    for (int j = 0; j < model.hidden; ++j) psi[j] = model.b1[j];
    for (int t = 0; t < model.d; ++t)
        kernels::axpy(x[t], model.w1.data() + static_cast<std::size_t>(t) * model.hidden,
                      psi.data(), model.hidden);
    kernels::relu(psi.data(), psi.data(), psi.size());
    return psi;
}

std::vector<double> feature_map(const Model& model,
                                const std::vector<double>& x, int y) {
    if (y < 0 || y >= model.k) throw std::out_of_range("class index");
    const std::vector<double> psi = feature_vector(model, x);
    std::vector<double> phi(static_cast<std::size_t>(model.k) * psi.size(),
                            0.0);
    std::copy(psi.begin(), psi.end(),
              phi.begin() + static_cast<std::size_t>(y) * psi.size());
    return phi;
}

MarginVector forward_margins(const Model& model,
                             const std::vector<double>& x) {
    const std::vector<double> psi = feature_vector(model, x);
    const std::size_t fd = psi.size();
    MarginVector f(model.k);
    for (int y = 0; y < model.k; ++y)
        f[y] = kernels::dot(psi.data(), model.mu.data() + y * fd, fd);
    return f;
}

void ModelGrads::resize_like(const Model& model) {
    mu.assign(model.mu.size(), 0.0);
    w1.assign(model.w1.size(), 0.0);
    b1.assign(model.b1.size(), 0.0);
}

void ModelGrads::zero() {
    std::fill(mu.begin(), mu.end(), 0.0);
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
}

void backward(const Model& model, const std::vector<double>& x,
              const std::vector<double>& margin_grad, ModelGrads& grads) {
    if (margin_grad.size() != static_cast<std::size_t>(model.k))
        throw std::invalid_argument("margin gradient length mismatch");
    ForwardBatch fwd;
    forward_batch(model, x.data(), 1, fwd);
    backward_batch(model, x.data(), fwd, margin_grad.data(), grads);
}

void forward_batch(const Model& model, const double* x, std::size_t batch,
                   ForwardBatch& out) {
    const std::size_t fd = model.feature_dim();
    out.batch = batch;
    if (model.kind == ModelKind::mlp) {
        out.pre.resize(batch * fd);
        out.psi.resize(batch * fd);
        kernels::matmul(x, model.w1.data(), out.pre.data(), batch, model.d,
                        fd);
        kernels::add_bias_rows(out.pre.data(), model.b1.data(), batch, fd);
        kernels::relu(out.pre.data(), out.psi.data(), out.pre.size());
    } else {
        out.pre.clear();
        out.psi.assign(x, x + batch * fd);
    }
    out.margins.resize(batch * model.k);
    for (std::size_t s = 0; s < batch; ++s) {
        const double* psi = out.psi.data() + s * fd;
        double* f = out.margins.data() + s * model.k;
        for (int y = 0; y < model.k; ++y)
            f[y] = kernels::dot(psi, model.mu.data() + y * fd, fd);
    }
}

void backward_batch(const Model& model, const double* x,
                    const ForwardBatch& fwd, const double* margin_grads,
                    ModelGrads& grads) {
    const std::size_t fd = model.feature_dim();
    const std::size_t batch = fwd.batch;
    // final layer: d mu[block y] += g_y * psi(x)
    for (std::size_t s = 0; s < batch; ++s) {
        const double* psi = fwd.psi.data() + s * fd;
        const double* g = margin_grads + s * model.k;
        for (int y = 0; y < model.k; ++y)
            if (g[y] != 0.0)
                kernels::axpy(g[y], psi, grads.mu.data() + y * fd, fd);
    }
    if (model.kind != ModelKind::mlp) return;

    // hidden layer: dpsi = sum_y g_y mu[block y], masked by relu'
    std::vector<double> dpre(batch * fd);
    for (std::size_t s = 0; s < batch; ++s) {
        double* dpsi = dpre.data() + s * fd;
        std::fill(dpsi, dpsi + fd, 0.0);
        const double* g = margin_grads + s * model.k;
        for (int y = 0; y < model.k; ++y)
            if (g[y] != 0.0)
                kernels::axpy(g[y], model.mu.data() + y * fd, dpsi, fd);
    }
    kernels::relu_backward(fwd.pre.data(), dpre.data(), dpre.data(),
                           dpre.size());

    // dW1 = X^T dpre, db1 = column sums of dpre
    std::vector<double> dw1(model.w1.size());
    kernels::matmul_tn(x, dpre.data(), dw1.data(), model.d, batch, fd);
    kernels::axpy(1.0, dw1.data(), grads.w1.data(), dw1.size());
    for (std::size_t s = 0; s < batch; ++s)
        kernels::axpy(1.0, dpre.data() + s * fd, grads.b1.data(), fd);
}

void SgdState::resize_like(const Model& model) {
    v_mu.assign(model.mu.size(), 0.0);
    v_w1.assign(model.w1.size(), 0.0);
    v_b1.assign(model.b1.size(), 0.0);
}

void sgd_step(Model& model, const ModelGrads& grads, SgdState& state,
              double lr, double momentum, double clip_norm) {
    double norm_sq = kernels::l2norm_sq(grads.mu.data(), grads.mu.size()) +
                     kernels::l2norm_sq(grads.w1.data(), grads.w1.size()) +
                     kernels::l2norm_sq(grads.b1.data(), grads.b1.size());
    const double norm = std::sqrt(norm_sq);
    const double scale = norm > clip_norm ? clip_norm / norm : 1.0;

    auto update = [&](std::vector<double>& theta, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            v[i] = momentum * v[i] + scale * g[i];
            theta[i] -= lr * v[i];
        }
    };
    update(model.mu, state.v_mu, grads.mu);
    update(model.w1, state.v_w1, grads.w1);
    update(model.b1, state.v_b1, grads.b1);
}

namespace {

void write_tensor(std::ostream& os, const char* name,
                  const std::vector<double>& t, std::size_t row_len) {
    os << '[' << name << "]\n";
    char buf[40];
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", t[i]);
        os << buf;
        os << (((i + 1) % row_len == 0 || i + 1 == t.size()) ? '\n' : ' ');
    }
}

std::vector<double> read_tensor(std::istream& is, std::size_t count) {
    std::vector<double> t;
    t.reserve(count);
    double v;
    while (t.size() < count && is >> v) t.push_back(v);
    if (t.size() != count)
        throw std::runtime_error("checkpoint: truncated tensor");
    return t;
}

} // namespace

void save_checkpoint(const Model& model, double beta,
                     const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", beta);
    os << "mgce-checkpoint v1\n";
    os << "model=" << (model.kind == ModelKind::linear ? "linear" : "mlp")
       << " k=" << model.k << " d=" << model.d << " hidden=" << model.hidden
       << " beta=" << buf << '\n';
    write_tensor(os, "mu", model.mu, model.feature_dim());
    if (model.kind == ModelKind::mlp) {
        write_tensor(os, "W1", model.w1, model.hidden);
        write_tensor(os, "b1", model.b1, model.hidden);
    }
}

Model load_checkpoint(const std::string& path, double* beta_out) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string line;
    std::getline(is, line);
    if (line != "mgce-checkpoint v1")
        throw std::runtime_error("checkpoint: bad magic line");
    std::getline(is, line);
    std::string kind;
    int k = 0, d = 0, hidden = 0;
    double beta = 0.0;
    {
        std::istringstream hs(line);
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("checkpoint: bad header token");
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            if (key == "model") kind = val;
            else if (key == "k") k = std::stoi(val);
            else if (key == "d") d = std::stoi(val);
            else if (key == "hidden") hidden = std::stoi(val);
            else if (key == "beta") beta = std::stod(val);
        }
    }
    if (beta_out) *beta_out = beta;
    Model m;
    if (kind == "linear") {
        m = make_linear_model(d, k);
    } else if (kind == "mlp") {
        m = make_mlp_model(d, k, hidden, 0);
    } else {
        throw std::runtime_error("checkpoint: unknown model kind");
    }
    std::string section;
    while (is >> section) {
        if (section == "[mu]")
            m.mu = read_tensor(is, m.mu.size());
        else if (section == "[W1]")
            m.w1 = read_tensor(is, m.w1.size());
        else if (section == "[b1]")
            m.b1 = read_tensor(is, m.b1.size());
        else
            throw std::runtime_error("checkpoint: unknown section " +
                                     section);
    }
    return m;
}

} // namespace mgce
