// Built with -mavx2. Nothing here may run unless cpu_has_avx2() is true.

#include "vqa/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace vqa::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t n = out.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(&out[i], _mm256_add_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i])));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t n = out.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(&out[i], _mm256_sub_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i])));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t n = out.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(&out[i], _mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i])));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

inline void axpy_raw(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    axpy_raw(alpha, x.data(), y.data(), y.size());
}

void mul_acc(std::span<const double> a, std::span<const double> b, std::span<double> y) {
    const std::size_t n = y.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]));
        _mm256_storeu_pd(&y[i], _mm256_add_pd(_mm256_loadu_pd(&y[i]), prod));
    }
    for (; i < n; ++i) y[i] += a[i] * b[i];
}

void affine(std::span<const double> x, double scale, double shift, std::span<double> out) {
    const __m256d vs = _mm256_set1_pd(scale);
    const __m256d vt = _mm256_set1_pd(shift);
    const std::size_t n = out.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d prod = _mm256_mul_pd(vs, _mm256_loadu_pd(&x[i]));
        _mm256_storeu_pd(&out[i], _mm256_add_pd(prod, vt));
    }
    for (; i < n; ++i) out[i] = scale * x[i] + shift;
}

void relu(std::span<const double> x, std::span<double> out) {
    const __m256d zero = _mm256_setzero_pd();
    const std::size_t n = out.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        // max_pd returns the second operand on NaN or equality, matching the
        // scalar "x > 0 ? x : 0".
        _mm256_storeu_pd(&out[i], _mm256_max_pd(_mm256_loadu_pd(&x[i]), zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::span<const double> x, std::span<const double> g, std::span<double> gx) {
    const __m256d zero = _mm256_setzero_pd();
    const std::size_t n = gx.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(&x[i]), zero, _CMP_GT_OQ);
        const __m256d pass = _mm256_and_pd(pos, _mm256_loadu_pd(&g[i]));
        _mm256_storeu_pd(&gx[i], _mm256_add_pd(_mm256_loadu_pd(&gx[i]), pass));
    }
    for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_raw(a[i * k + p], b + p * n, crow, n);
    }
}

void adam(std::span<double> w, std::span<const double> g, std::span<double> m, std::span<double> v,
          double lr, double b1, double b2, double eps, double bc1, double bc2) {
    const double c1 = 1.0 - b1;
    const double c2 = 1.0 - b2;
    const __m256d vb1 = _mm256_set1_pd(b1), vc1 = _mm256_set1_pd(c1);
    const __m256d vb2 = _mm256_set1_pd(b2), vc2 = _mm256_set1_pd(c2);
    const __m256d vbc1 = _mm256_set1_pd(bc1), vbc2 = _mm256_set1_pd(bc2);
    const __m256d vlr = _mm256_set1_pd(lr), veps = _mm256_set1_pd(eps);
    const std::size_t n = w.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d vg = _mm256_loadu_pd(&g[i]);
        const __m256d vm = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(&m[i])),
                                         _mm256_mul_pd(vc1, vg));
        const __m256d vv = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(&v[i])),
                                         _mm256_mul_pd(vc2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(&m[i], vm);
        _mm256_storeu_pd(&v[i], vv);
        const __m256d mhat = _mm256_div_pd(vm, vbc1);
        const __m256d vhat = _mm256_div_pd(vv, vbc2);
        const __m256d step =
            _mm256_div_pd(_mm256_mul_pd(vlr, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), veps));
        _mm256_storeu_pd(&w[i], _mm256_sub_pd(_mm256_loadu_pd(&w[i]), step));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + c1 * g[i];
        v[i] = b2 * v[i] + c2 * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

constexpr KernelTable kAvx2{
    Isa::avx2, add, sub, mul, axpy, mul_acc, affine, relu, relu_backward, matmul_acc, adam,
};

}  // namespace

namespace detail {
const KernelTable& avx2_table_impl() { return kAvx2; }
}  // namespace detail

}  // namespace vqa::kernels
