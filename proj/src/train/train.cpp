#include "vqa/train.hpp"

#include "vqa/errors.hpp"
#include "vqa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace vqa::train {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

void TrainingConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(validation_split >= 0.0 && validation_split < 1.0)) {
        throw ConfigError("validation_split must lie in [0, 1)");
    }
    if (learning_rate < 0.0) throw ConfigError("learning rate must be nonnegative");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

double TrainingConfig::effective_learning_rate() const {
    if (learning_rate > 0.0) return learning_rate;
    return optimizer == OptimizerKind::sgd ? 0.01 : 0.001;
}

std::string EpochReport::format() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.6f acc=%.6f val_loss=%.6f val_acc=%.6f", epoch,
                  loss, accuracy, val_loss, val_accuracy);
    return buf;
}

ad::Tensor cross_entropy(ad::Tape& tape, const ad::Tensor& scores, std::span<const int> targets) {
    if (scores.rank() != 2 || scores.dim(0) != targets.size()) {
        throw DimensionError("cross_entropy: scores " + ad::to_string(scores.shape()) + " for " +
                             std::to_string(targets.size()) + " targets");
    }
    const std::size_t n = scores.dim(0), k = scores.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= k) {
            throw IndexError("cross_entropy: target " + std::to_string(targets[i]) + " at row " +
                             std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
        }
    }
    ad::Tensor out = ad::Tensor::make_result({1}, scores.requires_grad());
    double total = 0.0;
    const auto p = scores.data();
    for (std::size_t i = 0; i < n; ++i) {
        total -= std::log(std::max(p[i * k + static_cast<std::size_t>(targets[i])], kLogClamp));
    }
    out.data()[0] = total / static_cast<double>(n);

    std::vector<int> tgt(targets.begin(), targets.end());
    tape.record({scores}, out, [scores, out, tgt = std::move(tgt), n, k]() mutable {
        const double g = out.grad()[0] / static_cast<double>(n);
        auto gs = scores.grad();
        const auto p = scores.data();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t at = i * k + static_cast<std::size_t>(tgt[i]);
            // Below the clamp the loss is flat.
            if (p[at] >= kLogClamp) gs[at] -= g / p[at];
        }
    });
    return out;
}

void sgd_step(std::span<double> weights, std::span<const double> grads, double lr) {
    if (weights.size() != grads.size()) throw DimensionError("sgd_step: weight/grad size mismatch");
    kernels::active().axpy(-lr, grads, weights);
}

void sgd_step(std::span<ad::Tensor> params, double lr) {
    for (auto& p : params) sgd_step(p.data(), p.grad(), lr);
}

AdamState::AdamState(std::span<const ad::Tensor> params) {
    for (const auto& p : params) {
        m.emplace_back(p.size(), 0.0);
        v.emplace_back(p.size(), 0.0);
    }
}

void adam_step(std::span<ad::Tensor> params, AdamState& state, std::size_t t,
               const TrainingConfig& cfg) {
    if (t < 1) throw ContractError("adam_step: step counter starts at 1");
    if (state.m.size() != params.size()) throw ContractError("adam_step: state does not match parameters");
    const double lr = cfg.effective_learning_rate();
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (state.m[i].size() != params[i].size()) {
            throw ContractError("adam_step: moment buffer shape differs from parameter");
        }
        kernels::active().adam(params[i].data(), params[i].grad(), state.m[i], state.v[i], lr,
                               cfg.beta1, cfg.beta2, cfg.epsilon, bc1, bc2);
    }
}

double accuracy(std::span<const int> predictions, std::span<const int> targets) {
    if (predictions.size() != targets.size()) {
        throw ContractError("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                            std::to_string(targets.size()) + " targets");
    }
    if (targets.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) hits += predictions[i] == targets[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(targets.size());
}

Evaluation evaluate(const model::Model& model, const model::Batch& batch,
                    std::span<const int> targets) {
    if (batch.size() == 0) return {};
    const ad::Tensor scores = model.predict_scores(batch);
    ad::Tape scratch;
    const double loss = cross_entropy(scratch, scores, targets).item();
    const auto predicted = model::argmax_rows(scores);
    return {loss, accuracy(predicted, targets)};
}

std::size_t validation_count(std::size_t n, double split) {
    // The epsilon keeps products like 30 * 0.1 = 3.0000000000000004 from
    // rounding up to an extra example.
    return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * split - 1e-9));
}

std::vector<EpochReport> fit(model::Model& model, const model::Batch& inputs,
                             std::span<const int> targets, const TrainingConfig& cfg,
                             const EpochCallback& on_epoch) {
    cfg.validate();
    const std::size_t n = inputs.size();
    if (targets.size() != n) {
        throw ContractError("fit: " + std::to_string(n) + " inputs but " +
                            std::to_string(targets.size()) + " targets");
    }
    const std::size_t n_val = validation_count(n, cfg.validation_split);
    if (n_val >= n) throw ConfigError("training portion is empty after the validation split");
    const std::size_t n_train = n - n_val;

    std::vector<std::size_t> train_rows(n_train);
    std::iota(train_rows.begin(), train_rows.end(), 0);
    std::vector<std::size_t> val_rows(n_val);
    std::iota(val_rows.begin(), val_rows.end(), n_train);
    const model::Batch train_set = inputs.select(train_rows);
    const model::Batch val_set = inputs.select(val_rows);
    const std::vector<int> train_targets(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<int> val_targets(targets.begin() + static_cast<std::ptrdiff_t>(n_train), targets.end());

    std::vector<ad::Tensor> params = model.parameter_tensors();
    AdamState adam(params);
    const double lr = cfg.effective_learning_rate();
    Rng rng(cfg.seed);
    std::size_t step = 0;

    std::vector<EpochReport> reports;
    std::vector<std::size_t> order = train_rows;
    std::vector<int> batch_targets;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, n_train);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const model::Batch batch = train_set.select(rows);
            batch_targets.clear();
            for (std::size_t r : rows) batch_targets.push_back(train_targets[r]);

            model.zero_grad();
            ad::Tape tape;
            const ad::Tensor scores = model.forward(tape, batch, true, rng);
            tape.backward(cross_entropy(tape, scores, batch_targets));

            ++step;
            if (cfg.optimizer == OptimizerKind::sgd) {
                sgd_step(params, lr);
            } else {
                adam_step(params, adam, step, cfg);
            }
        }

        const Evaluation train_eval = evaluate(model, train_set, train_targets);
        const Evaluation val_eval = evaluate(model, val_set, val_targets);
        reports.push_back({epoch, train_eval.loss, train_eval.accuracy, val_eval.loss, val_eval.accuracy});
        if (on_epoch) on_epoch(reports.back());
    }
    return reports;
}

}  // namespace vqa::train
