#pragma once

// Dense double-precision kernels used by the model forward/backward passes.
// Every operation has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant selected at runtime. The two are
// equivalence-tested against each other; results may differ only by
// floating-point summation order.

#include <cstddef>

namespace mgce::kernels {

enum class Isa { scalar, avx2 };

// Best ISA supported by the running CPU.
Isa detect_isa();

// Currently active ISA (defaults to detect_isa() at first use).
Isa active_isa();

// Force a specific ISA, e.g. to run the scalar reference. Returns the
// previously active ISA. Requesting an unsupported ISA falls back to scalar.
Isa set_isa(Isa isa);

// y . x over n elements
double dot(const double* x, const double* y, std::size_t n);

// y += a * x over n elements
void axpy(double a, const double* x, double* y, std::size_t n);

// x *= a over n elements
void scale(double a, double* x, std::size_t n);

// sum of squares
double l2norm_sq(const double* x, std::size_t n);

// C (m x n) = A (m x k) * B (k x n), all row-major, C overwritten
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

// C (m x n) = A^T * B with A (k x m) and B (k x n) row-major, C overwritten.
// Used for weight gradients: C[i][j] = sum_s A[s][i] * B[s][j].
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

// row-major (rows x n): each row += bias (length n)
void add_bias_rows(double* x, const double* bias,
                   std::size_t rows, std::size_t n);

// y = max(x, 0)
void relu(const double* x, double* y, std::size_t n);

// dx = dy where x > 0, else 0 (the derivative at 0 is taken as 0)
void relu_backward(const double* x, const double* dy, double* dx,
                   std::size_t n);

namespace detail {
// Scalar reference implementations, exposed for equivalence tests.
double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void scale_scalar(double a, double* x, std::size_t n);
double l2norm_sq_scalar(const double* x, std::size_t n);
void matmul_scalar(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_tn_scalar(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
void relu_scalar(const double* x, double* y, std::size_t n);
void relu_backward_scalar(const double* x, const double* dy, double* dx,
                          std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
void scale_avx2(double a, double* x, std::size_t n);
double l2norm_sq_avx2(const double* x, std::size_t n);
void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);
void matmul_tn_avx2(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);
void relu_avx2(const double* x, double* y, std::size_t n);
void relu_backward_avx2(const double* x, const double* dy, double* dx,
                        std::size_t n);
#endif
} // namespace detail

} // namespace mgce::kernels
