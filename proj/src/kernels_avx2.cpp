// AVX2 + FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; callers must check avx2_available() before dispatching here.

#include <cstddef>

#if defined(BUBBLECAST_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace bubblecast::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum(acc) + tail;
}

void matvec_bias(const double* W, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        y[r] = dot(W + r * cols, x, cols) + (b ? b[r] : 0.0);
}

void matvec_transposed(const double* W, const double* d, double* y,
                       std::size_t rows, std::size_t cols) {
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) _mm256_storeu_pd(y + c, _mm256_setzero_pd());
    for (; c < cols; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = W + r * cols;
        const __m256d dr = _mm256_set1_pd(d[r]);
        std::size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            __m256d acc = _mm256_loadu_pd(y + i);
            acc = _mm256_fmadd_pd(dr, _mm256_loadu_pd(row + i), acc);
            _mm256_storeu_pd(y + i, acc);
        }
        for (; i < cols; ++i) y[i] += d[r] * row[i];
    }
}

void outer_accumulate(double* G, const double* d, const double* x,
                      std::size_t rows, std::size_t cols, double s) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = G + r * cols;
        const double sd = s * d[r];
        const __m256d vsd = _mm256_set1_pd(sd);
        std::size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            __m256d acc = _mm256_loadu_pd(row + i);
            acc = _mm256_fmadd_pd(vsd, _mm256_loadu_pd(x + i), acc);
            _mm256_storeu_pd(row + i, acc);
        }
        for (; i < cols; ++i) row[i] += sd * x[i];
    }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_loadu_pd(y + i);
        acc = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), acc);
        _mm256_storeu_pd(y + i, acc);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return hsum(acc) + tail;
}

void relu(const double* x, double* y, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* pre, const double* grad_out, double* grad_in,
                   std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(grad_in + i,
                         _mm256_and_pd(mask, _mm256_loadu_pd(grad_out + i)));
    }
    for (; i < n; ++i) grad_in[i] = pre[i] > 0.0 ? grad_out[i] : 0.0;
}

void adam_update(double* w, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vibc1 = _mm256_set1_pd(1.0 / bc1);
    const __m256d vibc2 = _mm256_set1_pd(1.0 / bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_loadu_pd(m + i);
        __m256d vi = _mm256_loadu_pd(v + i);
        mi = _mm256_fmadd_pd(vb1, mi, _mm256_mul_pd(vb1c, gi));
        vi = _mm256_fmadd_pd(vb2, vi, _mm256_mul_pd(vb2c, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_mul_pd(mi, vibc1);
        const __m256d vhat = _mm256_mul_pd(vi, vibc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
        _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace bubblecast::kernels::avx2

#endif  // BUBBLECAST_HAVE_AVX2
