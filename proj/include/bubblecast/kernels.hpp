#pragma once

#include <cstddef>

namespace bubblecast::kernels {

// Dense inner loops of the MDN (layer mat-vecs, activation maps, gradient
// accumulation, Adam steps) have scalar reference implementations plus AVX2
// variants. The backend is chosen once at startup: AVX2+FMA when the CPU and
// build support it, overridable with BUBBLECAST_KERNELS=scalar|avx2.
// Both variants are equivalence-tested against each other; results may
// differ by summation order at the level of a few ulps.

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);  // test hook; throws if avx2 is unavailable
bool avx2_available();

/// y = W x + b, W row-major (rows x cols), b length rows (may be null).
void matvec_bias(const double* W, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols);

/// y = W^T d, W row-major (rows x cols), d length rows, y length cols.
void matvec_transposed(const double* W, const double* d, double* y,
                       std::size_t rows, std::size_t cols);

/// G += s * d * x^T, G row-major (rows x cols).
void outer_accumulate(double* G, const double* d, const double* x,
                      std::size_t rows, std::size_t cols, double s);

double dot(const double* a, const double* b, std::size_t n);

/// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);

double sum(const double* x, std::size_t n);

/// y_i = max(x_i, 0)
void relu(const double* x, double* y, std::size_t n);

/// grad_in_i = grad_out_i * (pre_i > 0)
void relu_backward(const double* pre, const double* grad_out, double* grad_in,
                   std::size_t n);

/// One Adam step on n parameters. bc1 = 1 - beta1^t, bc2 = 1 - beta2^t.
void adam_update(double* w, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2);

}  // namespace bubblecast::kernels
