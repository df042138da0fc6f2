#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cwnet/rng.hpp"
#include "cwnet/tensor.hpp"

namespace cwnet::nn {

enum class Activation : std::uint8_t {
    None = 0,
    ReLU,
    LeakyReLU,  // negative slope 0.01
    Tanh,
    ELU,  // alpha 1
    Sigmoid,
    Softmax,  // terminal classification layers only
};

const char* activation_name(Activation a);

struct LayerSpec {
    enum class Kind : std::uint8_t { Dense = 0, Conv1d = 1 };

    Kind kind = Kind::Dense;
    // dense
    std::size_t in_size = 0;
    std::size_t out_size = 0;
    // conv1d ("valid" padding)
    std::size_t filters = 0;
    std::size_t kernel = 0;
    std::size_t stride = 1;
    Activation activation = Activation::None;

    static LayerSpec dense(std::size_t in, std::size_t out, Activation act) {
        LayerSpec s;
        s.kind = Kind::Dense;
        s.in_size = in;
        s.out_size = out;
        s.activation = act;
        return s;
    }

    static LayerSpec conv1d(std::size_t filters, std::size_t kernel, std::size_t stride,
                            Activation act) {
        LayerSpec s;
        s.kind = Kind::Conv1d;
        s.filters = filters;
        s.kernel = kernel;
        s.stride = stride;
        s.activation = act;
        return s;
    }
};

// A LayerSpec with its position in the network resolved: flat input/output
// widths plus the (channels, length) view used by conv layers.
struct ResolvedLayer {
    LayerSpec spec;
    std::size_t in_features = 0;   // flat input width
    std::size_t out_features = 0;  // flat output width
    std::size_t in_channels = 0;   // conv only
    std::size_t in_len = 0;        // conv only
    std::size_t out_len = 0;       // conv only
    std::size_t param_offset = 0;  // offset into the flat parameter store
    std::size_t weight_count = 0;
    std::size_t bias_count = 0;

    std::size_t param_count() const { return weight_count + bias_count; }
};

// Activation record produced by forward(); owns everything backward() needs.
struct Tape {
    std::size_t batch = 0;
    std::uint64_t net_version = 0;
    const void* net_id = nullptr;
    std::vector<Tensor> layer_inputs;  // input of layer l, [batch, in_features]
    std::vector<Tensor> preact;        // pre-activation of layer l
    Tensor output;                     // post-activation of the terminal layer
};

struct BackwardResult {
    std::vector<double> param_grads;  // aligned with Network::params
    Tensor input_grad;                // [batch, in_features]
};

// Sequential differentiable network over a flat parameter store.
class Network {
  public:
    Network() = default;

    // Validates shape chaining, conv output lengths and Softmax placement.
    // Throws ConfigError on any violation.
    static Network build(std::size_t input_features, std::vector<LayerSpec> specs);

    // Glorot-uniform weights, zero biases.
    void init_params(Rng& rng);

    std::size_t input_size() const { return input_features_; }
    std::size_t output_size() const { return layers_.empty() ? 0 : layers_.back().out_features; }
    std::size_t param_count() const { return params_.size(); }
    const std::vector<ResolvedLayer>& layers() const { return layers_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }

    std::uint64_t version() const { return version_; }
    // Any mutation of params must bump the version so stale tapes are caught.
    void bump_version() { ++version_; }

    // input: [batch, input_features]. Returns the post-activation output
    // [batch, output_features]; the tape records enough to run backward().
    Tensor forward(const Tensor& input, std::size_t batch, Tape& tape) const;
    Tensor forward(const Tensor& input, std::size_t batch) const;

    // output_grad is dLoss/d(output). Exact for the realized computation.
    BackwardResult backward(const Tape& tape, const Tensor& output_grad) const;

    // output_grad is dLoss/d(pre-activation of the terminal layer); the
    // terminal activation derivative is skipped. Used with the fused
    // Softmax/cross-entropy and Sigmoid/BCE gradients.
    BackwardResult backward_from_logits(const Tape& tape, const Tensor& output_grad) const;

    std::string describe() const;

  private:
    BackwardResult backward_impl(const Tape& tape, const Tensor& output_grad,
                                 bool from_logits) const;

    std::size_t input_features_ = 0;
    std::vector<ResolvedLayer> layers_;
    std::vector<double> params_;
    bool frozen_ = false;
    std::uint64_t version_ = 0;
};

}  // namespace cwnet::nn
