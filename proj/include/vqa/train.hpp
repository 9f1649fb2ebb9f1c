#pragma once

// Cross-entropy training with SGD or Adam.

#include "vqa/autodiff/tensor.hpp"
#include "vqa/models.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vqa::train {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct TrainingConfig {
    std::size_t batch_size = 512;
    std::size_t epochs = 40;
    double validation_split = 0.1;
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 0.0;  // 0 picks the optimizer default (sgd 0.01, adam 0.001)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
    double effective_learning_rate() const;
};

struct EpochReport {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;
    double accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;

    // "epoch=E loss=L acc=A val_loss=VL val_acc=VA", 6 decimals.
    std::string format() const;
};

inline constexpr double kLogClamp = 1e-12;

// Mean over rows of -log(max(scores[i, targets[i]], 1e-12)) -> shape [1].
// Throws IndexError for targets outside [0, K).
ad::Tensor cross_entropy(ad::Tape& tape, const ad::Tensor& scores, std::span<const int> targets);

// w -= lr * g
void sgd_step(std::span<double> weights, std::span<const double> grads, double lr);
void sgd_step(std::span<ad::Tensor> params, double lr);

// First and second moment estimates, one buffer per parameter, zero-initialized.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    explicit AdamState(std::span<const ad::Tensor> params);
};

// Bias-corrected Adam update at step t (t >= 1, counted from 1).
void adam_step(std::span<ad::Tensor> params, AdamState& state, std::size_t t,
               const TrainingConfig& cfg);

// Share of equal entries. Throws ContractError on a length mismatch.
double accuracy(std::span<const int> predictions, std::span<const int> targets);

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Inference-mode loss and accuracy. An empty batch evaluates to zeros.
Evaluation evaluate(const model::Model& model, const model::Batch& batch,
                    std::span<const int> targets);

// Number of trailing examples held out for validation: ceil(n * split).
std::size_t validation_count(std::size_t n, double split);

using EpochCallback = std::function<void(const EpochReport&)>;

// The last validation_count(N) examples, in the given order, form the
// validation set and never reach the optimizer. Each epoch shuffles the rest
// with the seeded generator, steps once per batch (the last batch may be
// short), and then reports inference-mode loss/accuracy on both portions.
std::vector<EpochReport> fit(model::Model& model, const model::Batch& inputs,
                             std::span<const int> targets, const TrainingConfig& cfg,
                             const EpochCallback& on_epoch = {});

}  // namespace vqa::train
