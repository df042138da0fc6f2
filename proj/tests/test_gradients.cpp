#include <doctest.h>

#include <cmath>
#include <memory>

#include "cwnet/gradcheck.hpp"
#include "cwnet/losses.hpp"
#include "cwnet/network.hpp"

using namespace cwnet;
using nn::Activation;
using nn::LayerSpec;
using nn::LossProbe;
using nn::Network;

namespace {

// Random-projection loss over the network output; exercises the plain
// backward path including the terminal activation derivative.
LossProbe projection_probe(std::size_t out_width, Rng& rng) {
    auto w = std::make_shared<std::vector<double>>(out_width);
    for (auto& v : *w) v = rng.uniform(-1.0, 1.0);
    LossProbe p;
    p.value = [w, out_width](const Tensor& y) {
        double acc = 0.0;
        for (std::size_t r = 0; r < y.shape[0]; ++r)
            for (std::size_t c = 0; c < out_width; ++c) acc += (*w)[c] * y[r * out_width + c];
        return acc;
    };
    p.grad = [w, out_width](const Tensor& y) {
        Tensor g({y.shape[0], out_width});
        for (std::size_t r = 0; r < y.shape[0]; ++r)
            for (std::size_t c = 0; c < out_width; ++c) g[r * out_width + c] = (*w)[c];
        return g;
    };
    return p;
}

LossProbe ce_probe(std::vector<std::size_t> targets) {
    auto t = std::make_shared<std::vector<std::size_t>>(std::move(targets));
    LossProbe p;
    p.from_logits = true;
    p.value = [t](const Tensor& y) { return nn::cross_entropy(y, *t).loss; };
    p.grad = [t](const Tensor& y) { return nn::cross_entropy(y, *t).logit_grad; };
    return p;
}

LossProbe bce_probe(std::vector<int> labels) {
    auto t = std::make_shared<std::vector<int>>(std::move(labels));
    LossProbe p;
    p.from_logits = true;
    p.value = [t](const Tensor& y) { return nn::binary_cross_entropy_batch(y, *t).loss; };
    p.grad = [t](const Tensor& y) { return nn::binary_cross_entropy_batch(y, *t).logit_grad; };
    return p;
}

bool has_kink(Activation a) { return a == Activation::ReLU || a == Activation::LeakyReLU; }

// Draws inputs, rejecting any that place a kinked pre-activation within
// 5e-3 of zero (the gradient is correct away from the kink; central
// differences straddling it would test nothing).
Tensor safe_input(Network& net, std::size_t batch, Rng& rng) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        Tensor x({batch, net.input_size()});
        for (auto& v : x.data) v = rng.uniform(-1.5, 1.5);
        nn::Tape tape;
        net.forward(x, batch, tape);
        bool ok = true;
        for (std::size_t li = 0; li < net.layers().size() && ok; ++li) {
            if (!has_kink(net.layers()[li].spec.activation)) continue;
            for (double z : tape.preact[li].data) {
                if (std::abs(z) < 5e-3) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) return x;
    }
    FAIL("could not draw a kink-safe input");
    return Tensor({batch, net.input_size()});
}

}  // namespace

TEST_CASE("dense layer input gradient equals the linear-map adjoint") {
    // y = W x, so dL/dx = W^T dL/dy exactly.
    Rng rng(41);
    Network net = Network::build(3, {LayerSpec::dense(3, 2, Activation::None)});
    net.init_params(rng);
    Tensor x({1, 3}, {0.7, -0.2, 1.1});
    nn::Tape tape;
    net.forward(x, 1, tape);
    Tensor g({1, 2}, {0.5, -1.5});
    const auto bw = net.backward(tape, g);
    const auto& W = net.params();
    for (std::size_t i = 0; i < 3; ++i) {
        const double want = W[0 * 3 + i] * g[0] + W[1 * 3 + i] * g[1];
        CHECK(bw.input_grad[i] == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("every layer kind and activation passes the finite-difference oracle") {
    Rng rng(42);
    const std::vector<Activation> acts = {Activation::None,      Activation::ReLU,
                                          Activation::LeakyReLU, Activation::Tanh,
                                          Activation::ELU,       Activation::Sigmoid};
    double worst = 0.0;
    for (Activation a1 : acts) {
        for (Activation a2 : {Activation::Tanh, Activation::LeakyReLU}) {
            Network net = Network::build(
                6, {LayerSpec::dense(6, 10, a1), LayerSpec::conv1d(3, 3, 1, a2),
                    LayerSpec::conv1d(4, 2, 2, Activation::ELU),
                    LayerSpec::dense(16, 5, Activation::None)});
            net.init_params(rng);
            Tensor x = safe_input(net, 3, rng);
            LossProbe probe = projection_probe(5, rng);
            worst = std::max(worst, nn::gradient_check(net, x, 3, probe));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("conv1d with stride 2 passes the finite-difference oracle") {
    Rng rng(43);
    Network net = Network::build(12, {LayerSpec::dense(12, 15, Activation::Tanh),
                                      LayerSpec::conv1d(8, 4, 2, Activation::LeakyReLU),
                                      LayerSpec::conv1d(8, 2, 1, Activation::Tanh),
                                      LayerSpec::dense(40, 4, Activation::None)});
    net.init_params(rng);
    Tensor x = safe_input(net, 2, rng);
    CHECK(nn::gradient_check(net, x, 2, projection_probe(4, rng)) < 1e-4);
}

TEST_CASE("saturated activations at +/-3 pass the finite-difference oracle") {
    for (Activation a : {Activation::Tanh, Activation::ELU, Activation::LeakyReLU}) {
        Rng rng(44);
        Network net = Network::build(4, {LayerSpec::dense(4, 4, a),
                                         LayerSpec::dense(4, 2, Activation::None)});
        net.init_params(rng);
        // Identity first layer so the pre-activations sit exactly at +/-3.
        for (std::size_t i = 0; i < 16; ++i) net.params()[i] = (i % 5 == 0) ? 1.0 : 0.0;
        net.bump_version();
        Tensor x({1, 4}, {3.0, -3.0, 3.0, -3.0});
        CHECK(nn::gradient_check(net, x, 1, projection_probe(2, rng)) < 1e-4);
    }
}

TEST_CASE("softmax + cross-entropy fused gradient passes the oracle") {
    Rng rng(45);
    Network net = Network::build(5, {LayerSpec::dense(5, 12, Activation::Tanh),
                                     LayerSpec::dense(12, 6, Activation::Softmax)});
    net.init_params(rng);
    Tensor x({4, 5});
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    CHECK(nn::gradient_check(net, x, 4, ce_probe({1, 5, 0, 3})) < 1e-4);
}

TEST_CASE("softmax full-Jacobian backward matches the oracle for a generic loss") {
    Rng rng(46);
    Network net = Network::build(4, {LayerSpec::dense(4, 5, Activation::Softmax)});
    net.init_params(rng);
    Tensor x({2, 4});
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    CHECK(nn::gradient_check(net, x, 2, projection_probe(5, rng)) < 1e-4);
}

TEST_CASE("sigmoid + binary-cross-entropy fused gradient passes the oracle") {
    Rng rng(47);
    Network net = Network::build(6, {LayerSpec::dense(6, 8, Activation::Tanh),
                                     LayerSpec::dense(8, 1, Activation::Sigmoid)});
    net.init_params(rng);
    Tensor x({4, 6});
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    CHECK(nn::gradient_check(net, x, 4, bce_probe({0, 1, 1, 0})) < 1e-4);
}

TEST_CASE("randomized small nets pass the oracle across 100 trials") {
    Rng rng(48);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t in = 3 + rng.uniform_index(5);
        const std::size_t hidden = 4 + rng.uniform_index(6);
        const Activation acts[] = {Activation::Tanh, Activation::ELU, Activation::LeakyReLU,
                                   Activation::Sigmoid};
        Network net = Network::build(
            in, {LayerSpec::dense(in, hidden, acts[rng.uniform_index(4)]),
                 LayerSpec::dense(hidden, 3, Activation::None)});
        net.init_params(rng);
        Tensor x = safe_input(net, 2, rng);
        worst = std::max(worst, nn::gradient_check(net, x, 2, projection_probe(3, rng)));
    }
    CHECK(worst < 1e-4);
}
