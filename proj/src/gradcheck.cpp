#include "cwnet/gradcheck.hpp"

#include <cmath>

#include "cwnet/errors.hpp"

namespace cwnet::nn {

namespace {
double rel_err(double a, double n) {
    return std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-4);
}
}  // namespace

double gradient_check(Network& net, const Tensor& input, std::size_t batch, const LossProbe& loss,
                      double h) {
    if (h <= 0.0) throw UsageError("gradient_check: h must be positive");

    Tape tape;
    const Tensor out = net.forward(input, batch, tape);
    const Tensor gout = loss.grad(out);
    const BackwardResult analytic =
        loss.from_logits ? net.backward_from_logits(tape, gout) : net.backward(tape, gout);

    double max_err = 0.0;

    auto loss_at = [&](const Tensor& x) { return loss.value(net.forward(x, batch)); };

    // Parameter coordinates.
    for (std::size_t i = 0; i < net.param_count(); ++i) {
        const double orig = net.params()[i];
        net.params()[i] = orig + h;
        net.bump_version();
        const double lp = loss_at(input);
        net.params()[i] = orig - h;
        net.bump_version();
        const double lm = loss_at(input);
        net.params()[i] = orig;
        net.bump_version();
        const double fd = (lp - lm) / (2.0 * h);
        max_err = std::max(max_err, rel_err(analytic.param_grads[i], fd));
    }

    // Input coordinates.
    Tensor x = input;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double lp = loss_at(x);
        x[i] = orig - h;
        const double lm = loss_at(x);
        x[i] = orig;
        const double fd = (lp - lm) / (2.0 * h);
        max_err = std::max(max_err, rel_err(analytic.input_grad[i], fd));
    }

    return max_err;
}

}  // namespace cwnet::nn
