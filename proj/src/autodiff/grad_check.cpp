#include "vqa/autodiff/grad_check.hpp"

#include "vqa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vqa::ad {

GradCheckResult grad_check(const LossFunction& f, std::span<Tensor> params, double h) {
    if (!(h > 0.0)) throw ContractError("grad_check step must be positive");
    for (const Tensor& p : params) {
        if (!p.requires_grad()) throw ContractError("grad_check parameter does not require a gradient");
    }

    for (Tensor& p : params) p.zero_grad();
    {
        Tape tape;
        tape.backward(f(tape));
    }

    GradCheckResult result;
    for (Tensor& p : params) {
        auto values = p.data();
        const auto analytic = p.grad();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];

            values[i] = saved + h;
            Tape plus_tape;
            const double plus = f(plus_tape).item();

            values[i] = saved - h;
            Tape minus_tape;
            const double minus = f(minus_tape).item();

            values[i] = saved;

            if (plus_tape.branch_signature() != minus_tape.branch_signature()) {
                ++result.skipped_at_kinks;
                continue;
            }
            const double numeric = (plus - minus) / (2.0 * h);
            const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
            result.max_rel_error = std::max(result.max_rel_error, err);
            ++result.checked;
        }
    }
    return result;
}

}  // namespace vqa::ad
