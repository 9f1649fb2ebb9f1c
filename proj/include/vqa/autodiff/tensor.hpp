#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vqa::ad {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major float64 array. Tensor is a cheap shared handle: copies
// alias the same storage, which is what lets a Tape hold on to the inputs of
// every recorded operation.
class Tensor {
public:
    Tensor() = default;

    // Extents must be positive. A rank-0 shape holds one element.
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return impl_ != nullptr; }
    bool same_as(const Tensor& other) const noexcept { return impl_ == other.impl_; }

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t size() const { return impl_->data.size(); }

    // A Tensor is a handle: copies share storage, and constness of the
    // handle does not extend to the buffers.
    std::span<double> data() const { return impl_->data; }
    // Empty unless requires_grad().
    std::span<double> grad() const { return impl_->grad; }

    bool requires_grad() const { return impl_->requires_grad; }

    // False for tensors produced by a recorded operation.
    bool is_leaf() const { return impl_->leaf; }

    void zero_grad();

    // Value of a one-element tensor.
    double item() const;

    // Deep copy with no gradient and no history.
    Tensor detached() const;

    // Output of an op: a fresh non-leaf tensor.
    static Tensor make_result(Shape shape, bool requires_grad);

private:
    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
        bool leaf = true;
    };

    std::shared_ptr<Impl> impl_;
};

// Define-by-run record of the operations of one forward pass. Nodes are
// appended in execution order, so inputs always precede their consumers and
// replaying in reverse is a valid topological order.
class Tape {
public:
    using BackwardFn = std::function<void()>;

    // Appends a node if the output requires a gradient; otherwise a no-op.
    // The backward rule reads output.grad() and accumulates into the inputs.
    void record(std::vector<Tensor> inputs, const Tensor& output, BackwardFn backward);

    // Seeds d(loss)/d(loss) = 1 and runs every node's rule once, newest first.
    // Gradients accumulate; callers zero parameter gradients between steps.
    void backward(const Tensor& loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear();

    // Non-differentiable ops (relu) fold their branch pattern in here so a
    // finite-difference checker can tell when a perturbation crossed a kink.
    void note_branches(std::span<const double> pre_activation);
    std::uint64_t branch_signature() const noexcept { return branch_signature_; }

private:
    struct Node {
        std::vector<Tensor> inputs;
        Tensor output;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::uint64_t branch_signature_ = 0xcbf29ce484222325ULL;
};

}  // namespace vqa::ad
