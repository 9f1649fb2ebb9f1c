#include "vqa/autodiff/ops.hpp"

#include "vqa/errors.hpp"
#include "vqa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vqa::ad {
namespace {

const kernels::KernelTable& K() { return kernels::active(); }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                             " vs " + to_string(b.shape()));
    }
}

std::vector<double> transposed(std::span<const double> x, std::size_t rows, std::size_t cols) {
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = x[r * cols + c];
    }
    return out;
}

// Splits [... x n] into (rows, n).
std::pair<std::size_t, std::size_t> as_matrix(const Tensor& t) {
    const std::size_t n = t.rank() == 0 ? 1 : t.shape().back();
    return {t.size() / n, n};
}

Tensor masked_temporal_reduce(Tape& tape, const Tensor& x, std::span<const std::uint8_t> mask,
                              bool average, const char* op) {
    std::size_t batch = 0;
    std::size_t steps = 0;
    std::size_t d = 0;
    Shape out_shape;
    if (x.rank() == 2) {
        batch = 1;
        steps = x.dim(0);
        d = x.dim(1);
        out_shape = {d};
    } else if (x.rank() == 3) {
        batch = x.dim(0);
        steps = x.dim(1);
        d = x.dim(2);
        out_shape = {batch, d};
    } else {
        throw DimensionError(std::string(op) + ": expected [T x d] or [N x T x d], got " +
                             to_string(x.shape()));
    }
    if (mask.size() != batch * steps) {
        throw DimensionError(std::string(op) + ": mask has " + std::to_string(mask.size()) +
                             " entries for input " + to_string(x.shape()));
    }

    std::vector<double> weight(batch);
    for (std::size_t n = 0; n < batch; ++n) {
        std::size_t count = 0;
        for (std::size_t t = 0; t < steps; ++t) count += mask[n * steps + t] != 0 ? 1 : 0;
        if (count == 0) {
            throw EmptySequenceError(std::string(op) + ": sequence " + std::to_string(n) +
                                     " has no unmasked step");
        }
        weight[n] = average ? 1.0 / static_cast<double>(count) : 1.0;
    }

    Tensor out = Tensor::make_result(out_shape, x.requires_grad());
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t n = 0; n < batch; ++n) {
        auto orow = od.subspan(n * d, d);
        for (std::size_t t = 0; t < steps; ++t) {
            if (mask[n * steps + t] == 0) continue;
            K().axpy(1.0, xd.subspan((n * steps + t) * d, d), orow);
        }
        K().affine(orow, weight[n], 0.0, orow);
    }

    std::vector<std::uint8_t> keep(mask.begin(), mask.end());
    tape.record({x}, out, [x, out, keep = std::move(keep), weight, batch, steps, d]() mutable {
        auto gx = x.grad();
        auto g = out.grad();
        for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t t = 0; t < steps; ++t) {
                if (keep[n * steps + t] == 0) continue;
                K().axpy(weight[n], g.subspan(n * d, d), gx.subspan((n * steps + t) * d, d));
            }
        }
    });
    return out;
}

template <class Forward, class Derivative>
Tensor unary(Tape& tape, const Tensor& x, Forward f, Derivative df_from_output) {
    Tensor out = Tensor::make_result(x.shape(), x.requires_grad());
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < xd.size(); ++i) od[i] = f(xd[i]);
    tape.record({x}, out, [x, out, df_from_output]() mutable {
        auto gx = x.grad();
        auto g = out.grad();
        auto y = out.data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * df_from_output(y[i]);
    });
    return out;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: cannot multiply " + to_string(a.shape()) + " by " +
                             to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out = Tensor::make_result({m, n}, a.requires_grad() || b.requires_grad());
    K().matmul_acc(a.data().data(), b.data().data(), out.data().data(), m, k, n);

    tape.record({a, b}, out, [a, b, out, m, k, n]() mutable {
        const double* g = out.grad().data();
        if (a.requires_grad()) {
            const auto bt = transposed(b.data(), k, n);
            K().matmul_acc(g, bt.data(), a.grad().data(), m, n, k);
        }
        if (b.requires_grad()) {
            const auto at = transposed(a.data(), m, k);
            K().matmul_acc(at.data(), g, b.grad().data(), k, m, n);
        }
    });
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    Tensor out = Tensor::make_result(a.shape(), a.requires_grad() || b.requires_grad());
    K().add(a.data(), b.data(), out.data());
    tape.record({a, b}, out, [a, b, out]() mutable {
        if (a.requires_grad()) K().axpy(1.0, out.grad(), a.grad());
        if (b.requires_grad()) K().axpy(1.0, out.grad(), b.grad());
    });
    return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    Tensor out = Tensor::make_result(a.shape(), a.requires_grad() || b.requires_grad());
    K().sub(a.data(), b.data(), out.data());
    tape.record({a, b}, out, [a, b, out]() mutable {
        if (a.requires_grad()) K().axpy(1.0, out.grad(), a.grad());
        if (b.requires_grad()) K().axpy(-1.0, out.grad(), b.grad());
    });
    return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    Tensor out = Tensor::make_result(a.shape(), a.requires_grad() || b.requires_grad());
    K().mul(a.data(), b.data(), out.data());
    tape.record({a, b}, out, [a, b, out]() mutable {
        if (a.requires_grad()) K().mul_acc(out.grad(), b.data(), a.grad());
        if (b.requires_grad()) K().mul_acc(out.grad(), a.data(), b.grad());
    });
    return out;
}

Tensor affine(Tape& tape, const Tensor& x, double scale, double shift) {
    Tensor out = Tensor::make_result(x.shape(), x.requires_grad());
    K().affine(x.data(), scale, shift, out.data());
    tape.record({x}, out, [x, out, scale]() mutable { K().axpy(scale, out.grad(), x.grad()); });
    return out;
}

Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
    const auto [rows, n] = as_matrix(x);
    if (bias.rank() != 1 || bias.dim(0) != n) {
        throw DimensionError("add_bias: bias " + to_string(bias.shape()) +
                             " does not match input " + to_string(x.shape()));
    }
    Tensor out = Tensor::make_result(x.shape(), x.requires_grad() || bias.requires_grad());
    for (std::size_t r = 0; r < rows; ++r) {
        K().add(x.data().subspan(r * n, n), bias.data(), out.data().subspan(r * n, n));
    }
    tape.record({x, bias}, out, [x, bias, out, rows = rows, n = n]() mutable {
        if (x.requires_grad()) K().axpy(1.0, out.grad(), x.grad());
        if (bias.requires_grad()) {
            for (std::size_t r = 0; r < rows; ++r) {
                K().axpy(1.0, out.grad().subspan(r * n, n), bias.grad());
            }
        }
    });
    return out;
}

Tensor concat(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() == 0 || a.rank() != b.rank() ||
        !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
        throw DimensionError("concat: leading extents differ between " + to_string(a.shape()) +
                             " and " + to_string(b.shape()));
    }
    const auto [rows, p] = as_matrix(a);
    const std::size_t q = b.shape().back();
    Shape shape = a.shape();
    shape.back() = p + q;
    Tensor out = Tensor::make_result(shape, a.requires_grad() || b.requires_grad());
    auto od = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().begin() + r * p, p, od.begin() + r * (p + q));
        std::copy_n(b.data().begin() + r * q, q, od.begin() + r * (p + q) + p);
    }
    tape.record({a, b}, out, [a, b, out, rows = rows, p = p, q]() mutable {
        auto g = out.grad();
        for (std::size_t r = 0; r < rows; ++r) {
            if (a.requires_grad()) K().axpy(1.0, g.subspan(r * (p + q), p), a.grad().subspan(r * p, p));
            if (b.requires_grad()) {
                K().axpy(1.0, g.subspan(r * (p + q) + p, q), b.grad().subspan(r * q, q));
            }
        }
    });
    return out;
}

namespace {

Tensor lookup_rows(Tape& tape, const Tensor& table, std::span<const int> indices, std::size_t rows,
                   std::size_t cols, bool batched) {
    if (table.rank() != 2) {
        throw DimensionError("embedding_lookup: table must be [V x d], got " +
                             to_string(table.shape()));
    }
    if (rows * cols != indices.size()) {
        throw DimensionError("embedding_lookup: " + std::to_string(indices.size()) +
                             " indices do not form a " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " matrix");
    }
    const std::size_t vocab = table.dim(0), d = table.dim(1);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= vocab) {
            throw IndexError("embedding_lookup: index " + std::to_string(indices[i]) +
                             " at position " + std::to_string(i) + " outside [0, " +
                             std::to_string(vocab) + ")");
        }
    }
    Shape shape = batched ? Shape{rows, cols, d} : Shape{cols, d};
    Tensor out = Tensor::make_result(shape, table.requires_grad());
    auto od = out.data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::copy_n(table.data().begin() + static_cast<std::size_t>(indices[i]) * d, d,
                    od.begin() + i * d);
    }
    std::vector<int> idx(indices.begin(), indices.end());
    tape.record({table}, out, [table, out, idx = std::move(idx), d]() mutable {
        auto g = out.grad();
        auto gt = table.grad();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            K().axpy(1.0, g.subspan(i * d, d),
                     gt.subspan(static_cast<std::size_t>(idx[i]) * d, d));
        }
    });
    return out;
}

}  // namespace

Tensor embedding_lookup(Tape& tape, const Tensor& table, std::span<const int> indices) {
    if (indices.empty()) {
        throw DimensionError("embedding_lookup: empty index sequence");
    }
    return lookup_rows(tape, table, indices, 1, indices.size(), false);
}

Tensor embedding_lookup(Tape& tape, const Tensor& table, std::span<const int> indices,
                        std::size_t rows, std::size_t cols) {
    return lookup_rows(tape, table, indices, rows, cols, true);
}

Tensor relu(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::make_result(x.shape(), x.requires_grad());
    K().relu(x.data(), out.data());
    tape.note_branches(x.data());
    tape.record({x}, out, [x, out]() mutable { K().relu_backward(x.data(), out.grad(), x.grad()); });
    return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
    return unary(tape, x, stable_sigmoid, [](double y) { return y * (1.0 - y); });
}

Tensor tanh(Tape& tape, const Tensor& x) {
    return unary(
        tape, x, [](double v) { return std::tanh(v); }, [](double y) { return 1.0 - y * y; });
}

Tensor softmax(Tape& tape, const Tensor& x) {
    const auto [rows, k] = as_matrix(x);
    Tensor out = Tensor::make_result(x.shape(), x.requires_grad());
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = xd.subspan(r * k, k);
        const double peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            od[r * k + j] = std::exp(row[j] - peak);
            total += od[r * k + j];
        }
        for (std::size_t j = 0; j < k; ++j) od[r * k + j] /= total;
    }
    tape.record({x}, out, [x, out, rows = rows, k = k]() mutable {
        auto g = out.grad();
        auto y = out.data();
        auto gx = x.grad();
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * y[r * k + j];
            for (std::size_t j = 0; j < k; ++j) gx[r * k + j] += y[r * k + j] * (g[r * k + j] - dot);
        }
    });
    return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::make_result({1}, x.requires_grad());
    double total = 0.0;
    for (double v : x.data()) total += v;
    out.data()[0] = total;
    tape.record({x}, out, [x, out]() mutable {
        const double g = out.grad()[0];
        for (double& gx : x.grad()) gx += g;
    });
    return out;
}

Tensor masked_temporal_average(Tape& tape, const Tensor& x, std::span<const std::uint8_t> mask) {
    return masked_temporal_reduce(tape, x, mask, true, "masked_temporal_average");
}

Tensor masked_temporal_sum(Tape& tape, const Tensor& x, std::span<const std::uint8_t> mask) {
    return masked_temporal_reduce(tape, x, mask, false, "masked_temporal_sum");
}

Tensor time_step(Tape& tape, const Tensor& x, std::size_t t) {
    if (x.rank() != 3 || t >= x.dim(1)) {
        throw DimensionError("time_step: step " + std::to_string(t) + " of " +
                             to_string(x.shape()));
    }
    const std::size_t batch = x.dim(0), steps = x.dim(1), d = x.dim(2);
    Tensor out = Tensor::make_result({batch, d}, x.requires_grad());
    for (std::size_t n = 0; n < batch; ++n) {
        std::copy_n(x.data().begin() + (n * steps + t) * d, d, out.data().begin() + n * d);
    }
    tape.record({x}, out, [x, out, batch, steps, d, t]() mutable {
        for (std::size_t n = 0; n < batch; ++n) {
            K().axpy(1.0, out.grad().subspan(n * d, d), x.grad().subspan((n * steps + t) * d, d));
        }
    });
    return out;
}

Tensor select_rows(Tape& tape, std::span<const std::uint8_t> mask, const Tensor& when_set,
                   const Tensor& otherwise) {
    require_same_shape("select_rows", when_set, otherwise);
    const auto [rows, d] = as_matrix(when_set);
    if (mask.size() != rows) {
        throw DimensionError("select_rows: mask has " + std::to_string(mask.size()) +
                             " entries for " + std::to_string(rows) + " rows");
    }
    Tensor out =
        Tensor::make_result(when_set.shape(), when_set.requires_grad() || otherwise.requires_grad());
    for (std::size_t r = 0; r < rows; ++r) {
        const Tensor& src = mask[r] != 0 ? when_set : otherwise;
        std::copy_n(src.data().begin() + r * d, d, out.data().begin() + r * d);
    }
    std::vector<std::uint8_t> keep(mask.begin(), mask.end());
    tape.record({when_set, otherwise}, out,
                [when_set, otherwise, out, keep = std::move(keep), rows = rows, d = d]() mutable {
                    for (std::size_t r = 0; r < rows; ++r) {
                        const Tensor& dst = keep[r] != 0 ? when_set : otherwise;
                        if (!dst.requires_grad()) continue;
                        K().axpy(1.0, out.grad().subspan(r * d, d), dst.grad().subspan(r * d, d));
                    }
                });
    return out;
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> factor(x.size());
    for (double& f : factor) f = rng.uniform() < rate ? 0.0 : keep_scale;
    Tensor out = Tensor::make_result(x.shape(), x.requires_grad());
    K().mul(x.data(), factor, out.data());
    tape.record({x}, out, [x, out, factor = std::move(factor)]() mutable {
        K().mul_acc(out.grad(), factor, x.grad());
    });
    return out;
}

}  // namespace vqa::ad
