#pragma once

// Differentiable primitives. Each op computes its forward value eagerly and,
// when any input requires a gradient, records a backward rule on the tape.

#include "vqa/autodiff/tensor.hpp"
#include "vqa/random.hpp"

#include <cstdint>
#include <span>

namespace vqa::ad {

// [m x k] * [k x n] -> [m x n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

// Elementwise over identical shapes.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

// scale * x + shift
Tensor affine(Tape& tape, const Tensor& x, double scale, double shift);

// x[... x n] + bias[n], bias broadcast over the leading axes.
Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias);

// Joins along the last axis; leading extents must match.
Tensor concat(Tape& tape, const Tensor& a, const Tensor& b);

// Rows of table[V x d] picked by index: result [T x d].
Tensor embedding_lookup(Tape& tape, const Tensor& table, std::span<const int> indices);

// Batched form: indices is a row-major [rows x cols] matrix; result [rows x cols x d].
Tensor embedding_lookup(Tape& tape, const Tensor& table, std::span<const int> indices,
                        std::size_t rows, std::size_t cols);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh(Tape& tape, const Tensor& x);

// Softmax over the last axis with max-subtraction.
Tensor softmax(Tape& tape, const Tensor& x);

// Sum of all entries -> shape [1].
Tensor sum(Tape& tape, const Tensor& x);

// Mean (or sum) over time of the rows whose mask entry is nonzero.
//   x [T x d],     mask of length T   -> [d]
//   x [N x T x d], mask of length N*T -> [N x d]
// Throws EmptySequenceError if a sequence has no unmasked step.
Tensor masked_temporal_average(Tape& tape, const Tensor& x, std::span<const std::uint8_t> mask);
Tensor masked_temporal_sum(Tape& tape, const Tensor& x, std::span<const std::uint8_t> mask);

// x [N x T x d] -> [N x d] slice at time step t.
Tensor time_step(Tape& tape, const Tensor& x, std::size_t t);

// Row-wise select over [N x d] tensors: row i comes from when_set if
// mask[i] != 0, else from otherwise.
Tensor select_rows(Tape& tape, std::span<const std::uint8_t> mask, const Tensor& when_set,
                   const Tensor& otherwise);

// Inverted dropout. Identity (the same tensor) when !training or rate == 0.
// Throws ConfigError unless 0 <= rate < 1.
Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng);

}  // namespace vqa::ad
