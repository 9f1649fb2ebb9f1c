#include "vqa/kernels.hpp"

#include <cmath>

namespace vqa::kernels {
namespace {

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}

void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
}

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void mul_acc(std::span<const double> a, std::span<const double> b, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a[i] * b[i];
}

void affine(std::span<const double> x, double scale, double shift, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * x[i] + shift;
}

void relu(std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::span<const double> x, std::span<const double> g, std::span<double> gx) {
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

void adam(std::span<double> w, std::span<const double> g, std::span<double> m, std::span<double> v,
          double lr, double b1, double b2, double eps, double bc1, double bc2) {
    const double c1 = 1.0 - b1;
    const double c2 = 1.0 - b2;
    for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + c1 * g[i];
        v[i] = b2 * v[i] + c2 * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

constexpr KernelTable kScalar{
    Isa::scalar, add, sub, mul, axpy, mul_acc, affine, relu, relu_backward, matmul_acc, adam,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace vqa::kernels
