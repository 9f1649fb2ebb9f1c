#include "vqa/autodiff/tensor.hpp"

#include "vqa/errors.hpp"

#include <algorithm>

namespace vqa::ad {

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t extent : shape) n *= extent;
    return n;
}

std::string to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

namespace {

void check_extents(const Shape& shape) {
    if (std::any_of(shape.begin(), shape.end(), [](std::size_t e) { return e == 0; })) {
        throw DimensionError("tensor extents must be positive, got " + to_string(shape));
    }
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    check_extents(shape);
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->data.assign(element_count(shape), 0.0);
    if (requires_grad) t.impl_->grad.assign(t.impl_->data.size(), 0.0);
    t.impl_->shape = std::move(shape);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values, bool requires_grad) {
    check_extents(shape);
    if (values.size() != element_count(shape)) {
        throw DimensionError("shape " + to_string(shape) + " needs " +
                             std::to_string(element_count(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->data = std::move(values);
    if (requires_grad) t.impl_->grad.assign(t.impl_->data.size(), 0.0);
    t.impl_->shape = std::move(shape);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::make_result(Shape shape, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    t.impl_->leaf = false;
    return t;
}

void Tensor::zero_grad() { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

double Tensor::item() const {
    if (size() != 1) {
        throw ContractError("item() on a tensor of shape " + to_string(shape()));
    }
    return impl_->data[0];
}

Tensor Tensor::detached() const { return from_data(impl_->shape, impl_->data, false); }

void Tape::record(std::vector<Tensor> inputs, const Tensor& output, BackwardFn backward) {
    if (!output.requires_grad()) return;
    nodes_.push_back(Node{std::move(inputs), output, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw ContractError("backward needs a scalar loss, got shape " +
                            (loss.defined() ? to_string(loss.shape()) : std::string("<none>")));
    }
    if (!loss.requires_grad()) {
        throw ContractError("loss does not depend on any tensor that requires a gradient");
    }
    if (!loss.is_leaf()) {
        const bool recorded = std::any_of(nodes_.begin(), nodes_.end(),
                                          [&](const Node& n) { return n.output.same_as(loss); });
        if (!recorded) throw ContractError("loss was not produced on this tape");
    }
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
}

void Tape::clear() {
    nodes_.clear();
    branch_signature_ = 0xcbf29ce484222325ULL;
}

void Tape::note_branches(std::span<const double> pre_activation) {
    // FNV-1a over the sign bits.
    for (double x : pre_activation) {
        branch_signature_ ^= x > 0.0 ? 1u : 0u;
        branch_signature_ *= 0x100000001b3ULL;
    }
}

}  // namespace vqa::ad
