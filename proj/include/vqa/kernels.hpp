#pragma once

// Data-parallel inner loops used by the autodiff engine and the optimizers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variant is picked once at startup from CPUID and can be forced
// with the environment variable VQA_KERNELS=scalar|avx2. Both variants perform
// the same IEEE operations per element in the same order (no FMA, no
// reassociated reductions), so results are bitwise identical across variants;
// tests/test_kernels.cpp checks that.

#include <cstddef>
#include <span>
#include <string_view>

namespace vqa::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;

    // out = a + b, out = a - b, out = a * b
    void (*add)(std::span<const double> a, std::span<const double> b, std::span<double> out);
    void (*sub)(std::span<const double> a, std::span<const double> b, std::span<double> out);
    void (*mul)(std::span<const double> a, std::span<const double> b, std::span<double> out);

    // y += alpha * x
    void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);

    // y += a * b
    void (*mul_acc)(std::span<const double> a, std::span<const double> b, std::span<double> y);

    // out = scale * x + shift
    void (*affine)(std::span<const double> x, double scale, double shift, std::span<double> out);

    // out = max(x, 0); NaN maps to 0.
    void (*relu)(std::span<const double> x, std::span<double> out);

    // gx += (x > 0 ? g : 0)
    void (*relu_backward)(std::span<const double> x, std::span<const double> g, std::span<double> gx);

    // c[m x n] += a[m x k] * b[k x n], all row-major. Accumulates over k in
    // ascending order for every output element.
    void (*matmul_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                       std::size_t n);

    // One Adam update over a parameter block:
    //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g*g
    //   w -= lr * (m / bc1) / (sqrt(v / bc2) + eps)
    // where bc1 = 1 - b1^t and bc2 = 1 - b2^t are precomputed by the caller.
    void (*adam)(std::span<double> w, std::span<const double> g, std::span<double> m,
                 std::span<double> v, double lr, double b1, double b2, double eps, double bc1,
                 double bc2);
};

const KernelTable& scalar_table();

// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

// True when the running CPU can execute the AVX2 table.
bool cpu_has_avx2();

// The table used by the library. Thread-safe to read.
const KernelTable& active();

// Force a particular variant. Throws ConfigError if it is unavailable.
void set_active(Isa isa);

}  // namespace vqa::kernels
