#include "cwnet/network.hpp"

#include <cmath>

#include "cwnet/errors.hpp"
#include "cwnet/kernels.hpp"

namespace cwnet::nn {

namespace {

constexpr double kLeakySlope = 0.01;

void apply_activation(Activation act, const double* z, double* y, std::size_t n,
                      std::size_t row_width) {
    switch (act) {
        case Activation::None:
            for (std::size_t i = 0; i < n; ++i) y[i] = z[i];
            break;
        case Activation::ReLU:
            for (std::size_t i = 0; i < n; ++i) y[i] = z[i] > 0.0 ? z[i] : 0.0;
            break;
        case Activation::LeakyReLU:
            for (std::size_t i = 0; i < n; ++i) y[i] = z[i] > 0.0 ? z[i] : kLeakySlope * z[i];
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(z[i]);
            break;
        case Activation::ELU:
            for (std::size_t i = 0; i < n; ++i) y[i] = z[i] > 0.0 ? z[i] : std::expm1(z[i]);
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-z[i]));
            break;
        case Activation::Softmax:
            // Row-wise, max-shifted for stability.
            for (std::size_t r = 0; r < n / row_width; ++r) {
                const double* zr = z + r * row_width;
                double* yr = y + r * row_width;
                double m = zr[0];
                for (std::size_t i = 1; i < row_width; ++i) m = std::max(m, zr[i]);
                double sum = 0.0;
                for (std::size_t i = 0; i < row_width; ++i) {
                    yr[i] = std::exp(zr[i] - m);
                    sum += yr[i];
                }
                for (std::size_t i = 0; i < row_width; ++i) yr[i] /= sum;
            }
            break;
    }
}

// dz from dLoss/dy using pre-activation z and post-activation y.
void activation_backward(Activation act, const double* z, const double* y, const double* gy,
                         double* gz, std::size_t n, std::size_t row_width) {
    switch (act) {
        case Activation::None:
            for (std::size_t i = 0; i < n; ++i) gz[i] = gy[i];
            break;
        case Activation::ReLU:
            for (std::size_t i = 0; i < n; ++i) gz[i] = z[i] > 0.0 ? gy[i] : 0.0;
            break;
        case Activation::LeakyReLU:
            for (std::size_t i = 0; i < n; ++i) gz[i] = z[i] > 0.0 ? gy[i] : kLeakySlope * gy[i];
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < n; ++i) gz[i] = gy[i] * (1.0 - y[i] * y[i]);
            break;
        case Activation::ELU:
            for (std::size_t i = 0; i < n; ++i) gz[i] = z[i] > 0.0 ? gy[i] : gy[i] * (y[i] + 1.0);
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) gz[i] = gy[i] * y[i] * (1.0 - y[i]);
            break;
        case Activation::Softmax:
            // Full Jacobian per row: gz_j = y_j (gy_j - sum_k gy_k y_k).
            for (std::size_t r = 0; r < n / row_width; ++r) {
                const double* yr = y + r * row_width;
                const double* gr = gy + r * row_width;
                double* or_ = gz + r * row_width;
                double dot = 0.0;
                for (std::size_t i = 0; i < row_width; ++i) dot += gr[i] * yr[i];
                for (std::size_t i = 0; i < row_width; ++i) or_[i] = yr[i] * (gr[i] - dot);
            }
            break;
    }
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::None: return "none";
        case Activation::ReLU: return "relu";
        case Activation::LeakyReLU: return "leaky_relu";
        case Activation::Tanh: return "tanh";
        case Activation::ELU: return "elu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

Network Network::build(std::size_t input_features, std::vector<LayerSpec> specs) {
    if (specs.empty()) throw ConfigError("network needs at least one layer");
    if (input_features == 0) throw ConfigError("network input width must be positive");

    Network net;
    net.input_features_ = input_features;

    std::size_t cur_features = input_features;
    // (channels, length) view of the running activation; dense output is a
    // single-channel sequence for a following conv layer.
    std::size_t cur_channels = 1;
    std::size_t cur_len = input_features;
    bool prev_was_conv = false;
    std::size_t offset = 0;

    for (std::size_t li = 0; li < specs.size(); ++li) {
        const LayerSpec& s = specs[li];
        ResolvedLayer r;
        r.spec = s;
        r.in_features = cur_features;
        r.param_offset = offset;

        if (s.activation == Activation::Softmax && li + 1 != specs.size()) {
            throw ConfigError("softmax is only valid as the terminal activation");
        }

        if (s.kind == LayerSpec::Kind::Dense) {
            if (s.in_size != cur_features) {
                throw ConfigError("dense layer " + std::to_string(li) + " expects input " +
                                  std::to_string(s.in_size) + " but gets " +
                                  std::to_string(cur_features));
            }
            if (s.out_size == 0) throw ConfigError("dense layer output width must be positive");
            r.out_features = s.out_size;
            r.weight_count = s.in_size * s.out_size;
            r.bias_count = s.out_size;
            cur_features = s.out_size;
            cur_channels = 1;
            cur_len = s.out_size;
            prev_was_conv = false;
        } else {
            if (s.filters == 0 || s.kernel == 0 || s.stride == 0) {
                throw ConfigError("conv1d layer needs positive filters/kernel/stride");
            }
            r.in_channels = prev_was_conv ? cur_channels : 1;
            r.in_len = prev_was_conv ? cur_len : cur_features;
            if (r.in_channels * r.in_len != cur_features) {
                throw ConfigError("conv1d layer " + std::to_string(li) + " shape bookkeeping error");
            }
            if (s.kernel > r.in_len) {
                throw ConfigError("conv1d layer " + std::to_string(li) + " kernel " +
                                  std::to_string(s.kernel) + " exceeds input length " +
                                  std::to_string(r.in_len));
            }
            r.out_len = kernels::conv1d_out_len(r.in_len, s.kernel, s.stride);
            if (r.out_len < 1) {
                throw ConfigError("conv1d layer " + std::to_string(li) + " has empty output");
            }
            r.out_features = s.filters * r.out_len;
            r.weight_count = s.filters * r.in_channels * s.kernel;
            r.bias_count = s.filters;
            cur_features = r.out_features;
            cur_channels = s.filters;
            cur_len = r.out_len;
            prev_was_conv = true;
        }

        offset += r.param_count();
        net.layers_.push_back(r);
    }

    net.params_.assign(offset, 0.0);
    return net;
}

void Network::init_params(Rng& rng) {
    if (frozen_) throw UsageError("cannot re-initialize a frozen network");
    for (const ResolvedLayer& r : layers_) {
        double fan_in, fan_out;
        if (r.spec.kind == LayerSpec::Kind::Dense) {
            fan_in = static_cast<double>(r.spec.in_size);
            fan_out = static_cast<double>(r.spec.out_size);
        } else {
            fan_in = static_cast<double>(r.in_channels * r.spec.kernel);
            fan_out = static_cast<double>(r.spec.filters * r.spec.kernel);
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        double* w = params_.data() + r.param_offset;
        for (std::size_t i = 0; i < r.weight_count; ++i) w[i] = rng.uniform(-limit, limit);
        double* b = w + r.weight_count;
        for (std::size_t i = 0; i < r.bias_count; ++i) b[i] = 0.0;
    }
    bump_version();
}

Tensor Network::forward(const Tensor& input, std::size_t batch, Tape& tape) const {
    if (layers_.empty()) throw ConfigError("forward on an empty network");
    if (batch == 0) throw UsageError("batch must be positive");
    if (input.size() != batch * input_features_) {
        throw ConfigError("forward input " + shape_str(input.shape) + " does not match " +
                          std::to_string(batch) + "x" + std::to_string(input_features_));
    }

    tape.batch = batch;
    tape.net_version = version_;
    tape.net_id = this;
    tape.layer_inputs.assign(layers_.size(), Tensor{});
    tape.preact.assign(layers_.size(), Tensor{});

    Tensor cur = input;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const ResolvedLayer& r = layers_[li];
        tape.layer_inputs[li] = cur;

        Tensor z({batch, r.out_features});
        const double* w = params_.data() + r.param_offset;
        const double* b = w + r.weight_count;
        if (r.spec.kind == LayerSpec::Kind::Dense) {
            kernels::dense_forward(batch, r.spec.in_size, r.spec.out_size, w, b, cur.ptr(),
                                   z.ptr());
        } else {
            kernels::conv1d_forward(batch, r.in_channels, r.in_len, r.spec.filters, r.spec.kernel,
                                    r.spec.stride, w, b, cur.ptr(), z.ptr());
        }

        Tensor y({batch, r.out_features});
        apply_activation(r.spec.activation, z.ptr(), y.ptr(), z.size(), r.out_features);
        tape.preact[li] = std::move(z);
        cur = std::move(y);
    }

    cur.require_finite("network forward");
    tape.output = cur;
    return cur;
}

Tensor Network::forward(const Tensor& input, std::size_t batch) const {
    Tape tape;
    return forward(input, batch, tape);
}

BackwardResult Network::backward(const Tape& tape, const Tensor& output_grad) const {
    return backward_impl(tape, output_grad, false);
}

BackwardResult Network::backward_from_logits(const Tape& tape, const Tensor& output_grad) const {
    return backward_impl(tape, output_grad, true);
}

BackwardResult Network::backward_impl(const Tape& tape, const Tensor& output_grad,
                                      bool from_logits) const {
    if (tape.net_id != this || tape.net_version != version_) {
        throw UsageError("stale or mismatched tape");
    }
    const std::size_t batch = tape.batch;
    if (output_grad.size() != batch * output_size()) {
        throw UsageError("output_grad does not match network output");
    }

    BackwardResult res;
    res.param_grads.assign(params_.size(), 0.0);

    Tensor gy = output_grad;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const ResolvedLayer& r = layers_[li];
        const Tensor& z = tape.preact[li];
        const Tensor& y = (li + 1 == layers_.size()) ? tape.output : tape.layer_inputs[li + 1];
        const Tensor& x = tape.layer_inputs[li];

        Tensor gz({batch, r.out_features});
        if (from_logits && li + 1 == layers_.size()) {
            gz = gy;
        } else {
            activation_backward(r.spec.activation, z.ptr(), y.ptr(), gy.ptr(), gz.ptr(), gz.size(),
                                r.out_features);
        }

        double* dw = res.param_grads.data() + r.param_offset;
        double* db = dw + r.weight_count;
        Tensor gx({batch, r.in_features});
        const double* w = params_.data() + r.param_offset;
        if (r.spec.kind == LayerSpec::Kind::Dense) {
            kernels::dense_backward_params(batch, r.spec.in_size, r.spec.out_size, x.ptr(),
                                           gz.ptr(), dw, db);
            kernels::dense_backward_input(batch, r.spec.in_size, r.spec.out_size, w, gz.ptr(),
                                          gx.ptr());
        } else {
            kernels::conv1d_backward_params(batch, r.in_channels, r.in_len, r.spec.filters,
                                            r.spec.kernel, r.spec.stride, x.ptr(), gz.ptr(), dw,
                                            db);
            kernels::conv1d_backward_input(batch, r.in_channels, r.in_len, r.spec.filters,
                                           r.spec.kernel, r.spec.stride, w, gz.ptr(), gx.ptr());
        }
        gy = std::move(gx);
    }

    res.input_grad = std::move(gy);
    return res;
}

std::string Network::describe() const {
    std::string out;
    for (const ResolvedLayer& r : layers_) {
        if (r.spec.kind == LayerSpec::Kind::Dense) {
            out += "dense " + std::to_string(r.spec.in_size) + "->" +
                   std::to_string(r.spec.out_size);
        } else {
            out += "conv1d c" + std::to_string(r.in_channels) + "xL" + std::to_string(r.in_len) +
                   " f" + std::to_string(r.spec.filters) + " k" + std::to_string(r.spec.kernel) +
                   " s" + std::to_string(r.spec.stride) + " -> L" + std::to_string(r.out_len);
        }
        out += std::string(" (") + activation_name(r.spec.activation) + ")\n";
    }
    out += "params: " + std::to_string(params_.size());
    return out;
}

}  // namespace cwnet::nn
