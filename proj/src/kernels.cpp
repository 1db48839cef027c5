#include "mgce/kernels.hpp"

namespace mgce::kernels {

namespace {

Isa g_active = []() {
    return detect_isa();
}();

} // namespace

Isa detect_isa() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return Isa::avx2;
#endif
    return Isa::scalar;
}

Isa active_isa() { return g_active; }

Isa set_isa(Isa isa) {
    Isa prev = g_active;
    g_active = (isa == Isa::avx2 && detect_isa() != Isa::avx2) ? Isa::scalar
                                                               : isa;
    return prev;
}

#if defined(__x86_64__) || defined(_M_X64)
#define MGCE_DISPATCH(fn, ...)                           \
    if (g_active == Isa::avx2)                           \
        return detail::fn##_avx2(__VA_ARGS__);           \
    return detail::fn##_scalar(__VA_ARGS__)
#else
#define MGCE_DISPATCH(fn, ...) return detail::fn##_scalar(__VA_ARGS__)
#endif

double dot(const double* x, const double* y, std::size_t n) {
    MGCE_DISPATCH(dot, x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    MGCE_DISPATCH(axpy, a, x, y, n);
}

void scale(double a, double* x, std::size_t n) {
    MGCE_DISPATCH(scale, a, x, n);
}

double l2norm_sq(const double* x, std::size_t n) {
    MGCE_DISPATCH(l2norm_sq, x, n);
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    MGCE_DISPATCH(matmul, a, b, c, m, k, n);
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    MGCE_DISPATCH(matmul_tn, a, b, c, m, k, n);
}

void add_bias_rows(double* x, const double* bias,
                   std::size_t rows, std::size_t n) {
    for (std::size_t r = 0; r < rows; ++r)
        axpy(1.0, bias, x + r * n, n);
}

void relu(const double* x, double* y, std::size_t n) {
    MGCE_DISPATCH(relu, x, y, n);
}

void relu_backward(const double* x, const double* dy, double* dx,
                   std::size_t n) {
    MGCE_DISPATCH(relu_backward, x, dy, dx, n);
}

#undef MGCE_DISPATCH

} // namespace mgce::kernels
