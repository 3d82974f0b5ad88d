#include "bubblecast/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace bubblecast::kernels {

namespace scalar {

void matvec_bias(const double* W, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = W + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc + (b ? b[r] : 0.0);
    }
}

void matvec_transposed(const double* W, const double* d, double* y,
                       std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = W + r * cols;
        const double dr = d[r];
        for (std::size_t c = 0; c < cols; ++c) y[c] += dr * row[c];
    }
}

void outer_accumulate(double* G, const double* d, const double* x,
                      std::size_t rows, std::size_t cols, double s) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = G + r * cols;
        const double sd = s * d[r];
        for (std::size_t c = 0; c < cols; ++c) row[c] += sd * x[c];
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void relu(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* pre, const double* grad_out, double* grad_in,
                   std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        grad_in[i] = pre[i] > 0.0 ? grad_out[i] : 0.0;
}

void adam_update(double* w, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace scalar

#if defined(BUBBLECAST_HAVE_AVX2)
namespace avx2 {
void matvec_bias(const double*, const double*, const double*, double*,
                 std::size_t, std::size_t);
void matvec_transposed(const double*, const double*, double*, std::size_t,
                       std::size_t);
void outer_accumulate(double*, const double*, const double*, std::size_t,
                      std::size_t, double);
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
void relu(const double*, double*, std::size_t);
void relu_backward(const double*, const double*, double*, std::size_t);
void adam_update(double*, double*, double*, const double*, std::size_t,
                 double, double, double, double, double, double);
}  // namespace avx2
#endif

namespace {

Backend pick_initial_backend() {
#if defined(BUBBLECAST_HAVE_AVX2)
    const char* env = std::getenv("BUBBLECAST_KERNELS");
    if (env) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_available())
            return Backend::avx2;
        return Backend::scalar;
    }
    if (avx2_available()) return Backend::avx2;
#endif
    return Backend::scalar;
}

Backend g_backend = pick_initial_backend();

}  // namespace

bool avx2_available() {
#if defined(BUBBLECAST_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_available())
        throw std::runtime_error("kernels: AVX2 backend not available");
    g_backend = b;
}

#if defined(BUBBLECAST_HAVE_AVX2)
#define BC_DISPATCH(fn, ...)                     \
    if (g_backend == Backend::avx2)              \
        return avx2::fn(__VA_ARGS__);            \
    return scalar::fn(__VA_ARGS__)
#else
#define BC_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void matvec_bias(const double* W, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
    BC_DISPATCH(matvec_bias, W, x, b, y, rows, cols);
}

void matvec_transposed(const double* W, const double* d, double* y,
                       std::size_t rows, std::size_t cols) {
    BC_DISPATCH(matvec_transposed, W, d, y, rows, cols);
}

void outer_accumulate(double* G, const double* d, const double* x,
                      std::size_t rows, std::size_t cols, double s) {
    BC_DISPATCH(outer_accumulate, G, d, x, rows, cols, s);
}

double dot(const double* a, const double* b, std::size_t n) {
    BC_DISPATCH(dot, a, b, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    BC_DISPATCH(axpy, a, x, y, n);
}

double sum(const double* x, std::size_t n) { BC_DISPATCH(sum, x, n); }

void relu(const double* x, double* y, std::size_t n) {
    BC_DISPATCH(relu, x, y, n);
}

void relu_backward(const double* pre, const double* grad_out, double* grad_in,
                   std::size_t n) {
    BC_DISPATCH(relu_backward, pre, grad_out, grad_in, n);
}

void adam_update(double* w, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
    BC_DISPATCH(adam_update, w, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}

#undef BC_DISPATCH

}  // namespace bubblecast::kernels
