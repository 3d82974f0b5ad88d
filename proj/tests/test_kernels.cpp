#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bubblecast/kernels.hpp"
#include "bubblecast/rng.hpp"

using namespace bubblecast;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    rng::Xoshiro256pp gen(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = gen.uniform(-2.0, 2.0);
    return v;
}

bool close(double a, double b, double tol = 1e-12) {
    return std::fabs(a - b) <= tol * (1.0 + std::fabs(a) + std::fabs(b));
}

}  // namespace

TEST_CASE("scalar kernels compute the reference linear algebra") {
    kernels::set_backend(kernels::Backend::scalar);
    const std::size_t rows = 3, cols = 4;
    const std::vector<double> W = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    const std::vector<double> x = {1, -1, 2, 0.5};
    const std::vector<double> b = {0.5, -0.5, 0.0};
    std::vector<double> y(rows);
    kernels::matvec_bias(W.data(), x.data(), b.data(), y.data(), rows, cols);
    CHECK(y[0] == doctest::Approx(1 - 2 + 6 + 2 + 0.5));
    CHECK(y[1] == doctest::Approx(5 - 6 + 14 + 4 - 0.5));
    CHECK(y[2] == doctest::Approx(9 - 10 + 22 + 6));

    std::vector<double> d = {1.0, 0.5, -1.0};
    std::vector<double> yt(cols);
    kernels::matvec_transposed(W.data(), d.data(), yt.data(), rows, cols);
    CHECK(yt[0] == doctest::Approx(1 * 1 + 5 * 0.5 - 9));
    CHECK(yt[3] == doctest::Approx(4 * 1 + 8 * 0.5 - 12));
}

#if defined(BUBBLECAST_HAVE_AVX2)
TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!kernels::avx2_available()) {
        MESSAGE("AVX2 not available on this CPU; skipping");
        return;
    }
    const std::size_t rows = 37, cols = 53;  // odd sizes exercise the tails
    const auto W = random_vec(rows * cols, 1);
    const auto x = random_vec(cols, 2);
    const auto b = random_vec(rows, 3);
    const auto d = random_vec(rows, 4);

    std::vector<double> y_s(rows), y_v(rows), t_s(cols), t_v(cols);
    std::vector<double> g_s(rows * cols, 0.1), g_v(rows * cols, 0.1);
    std::vector<double> r_s(cols), r_v(cols), rb_s(cols), rb_v(cols);
    std::vector<double> ax_s(b), ax_v(b);

    kernels::set_backend(kernels::Backend::scalar);
    kernels::matvec_bias(W.data(), x.data(), b.data(), y_s.data(), rows, cols);
    kernels::matvec_transposed(W.data(), d.data(), t_s.data(), rows, cols);
    kernels::outer_accumulate(g_s.data(), d.data(), x.data(), rows, cols, 0.7);
    const double dot_s = kernels::dot(W.data(), W.data(), rows * cols);
    const double sum_s = kernels::sum(W.data(), rows * cols);
    kernels::relu(x.data(), r_s.data(), cols);
    kernels::relu_backward(x.data(), x.data(), rb_s.data(), cols);
    kernels::axpy(0.3, d.data(), ax_s.data(), rows);

    kernels::set_backend(kernels::Backend::avx2);
    kernels::matvec_bias(W.data(), x.data(), b.data(), y_v.data(), rows, cols);
    kernels::matvec_transposed(W.data(), d.data(), t_v.data(), rows, cols);
    kernels::outer_accumulate(g_v.data(), d.data(), x.data(), rows, cols, 0.7);
    const double dot_v = kernels::dot(W.data(), W.data(), rows * cols);
    const double sum_v = kernels::sum(W.data(), rows * cols);
    kernels::relu(x.data(), r_v.data(), cols);
    kernels::relu_backward(x.data(), x.data(), rb_v.data(), cols);
    kernels::axpy(0.3, d.data(), ax_v.data(), rows);

    for (std::size_t i = 0; i < rows; ++i) CHECK(close(y_s[i], y_v[i]));
    for (std::size_t i = 0; i < cols; ++i) CHECK(close(t_s[i], t_v[i]));
    for (std::size_t i = 0; i < rows * cols; ++i) CHECK(close(g_s[i], g_v[i]));
    CHECK(close(dot_s, dot_v));
    CHECK(close(sum_s, sum_v));
    for (std::size_t i = 0; i < cols; ++i) {
        CHECK(r_s[i] == r_v[i]);      // relu is exact
        CHECK(rb_s[i] == rb_v[i]);
    }
    for (std::size_t i = 0; i < rows; ++i) CHECK(close(ax_s[i], ax_v[i]));
    kernels::set_backend(kernels::Backend::scalar);
}

TEST_CASE("adam steps agree across backends") {
    if (!kernels::avx2_available()) return;
    const std::size_t n = 131;
    const auto g = random_vec(n, 9);
    std::vector<double> w_s = random_vec(n, 10), w_v(w_s);
    std::vector<double> m_s(n, 0.0), m_v(n, 0.0), v_s(n, 0.0), v_v(n, 0.0);

    kernels::set_backend(kernels::Backend::scalar);
    for (int t = 1; t <= 5; ++t)
        kernels::adam_update(w_s.data(), m_s.data(), v_s.data(), g.data(), n,
                             1e-3, 0.9, 0.999, 1e-8,
                             1.0 - std::pow(0.9, t), 1.0 - std::pow(0.999, t));
    kernels::set_backend(kernels::Backend::avx2);
    for (int t = 1; t <= 5; ++t)
        kernels::adam_update(w_v.data(), m_v.data(), v_v.data(), g.data(), n,
                             1e-3, 0.9, 0.999, 1e-8,
                             1.0 - std::pow(0.9, t), 1.0 - std::pow(0.999, t));
    for (std::size_t i = 0; i < n; ++i) CHECK(close(w_s[i], w_v[i], 1e-11));
    kernels::set_backend(kernels::Backend::scalar);
}
#endif
