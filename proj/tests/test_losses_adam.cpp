#include <doctest.h>

#include <cmath>

#include "cwnet/adam.hpp"
#include "cwnet/errors.hpp"
#include "cwnet/losses.hpp"

using namespace cwnet;

TEST_CASE("cross entropy: perfect prediction has zero loss") {
    Tensor probs({1, 4}, {0.0, 1.0, 0.0, 0.0});
    const auto r = nn::cross_entropy(probs, 1);
    CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cross entropy: uniform over 16 classes is ln 16") {
    Tensor probs({1, 16});
    for (auto& p : probs.data) p = 1.0 / 16.0;
    const auto r = nn::cross_entropy(probs, 7);
    CHECK(r.loss == doctest::Approx(std::log(16.0)).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(2.7726).epsilon(1e-4));
}

TEST_CASE("cross entropy matches direct -ln p evaluation on random 4-class rows") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor probs({3, 4});
        std::vector<std::size_t> targets(3);
        for (std::size_t r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                probs[r * 4 + c] = rng.uniform(0.01, 1.0);
                sum += probs[r * 4 + c];
            }
            for (std::size_t c = 0; c < 4; ++c) probs[r * 4 + c] /= sum;
            targets[r] = rng.uniform_index(4);
        }
        // independent direct evaluation
        double expected = 0.0;
        for (std::size_t r = 0; r < 3; ++r) expected += -std::log(probs[r * 4 + targets[r]]);
        expected /= 3.0;
        const auto res = nn::cross_entropy(probs, targets);
        CHECK(res.loss == doctest::Approx(expected).epsilon(1e-12));
        // fused logit grad = (p - onehot)/batch
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t c = 0; c < 4; ++c) {
                const double want = (probs[r * 4 + c] - (c == targets[r] ? 1.0 : 0.0)) / 3.0;
                CHECK(res.logit_grad[r * 4 + c] == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("cross entropy clamps vanishing target probability") {
    Tensor probs({1, 2}, {1.0, 0.0});
    const auto r = nn::cross_entropy(probs, 1);
    CHECK(r.loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
    CHECK(std::isfinite(r.loss));
}

TEST_CASE("binary cross entropy analytic anchors") {
    CHECK(nn::binary_cross_entropy(0.5, 0).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(nn::binary_cross_entropy(0.5, 1).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(nn::binary_cross_entropy(0.5, 1).loss == doctest::Approx(0.6931).epsilon(1e-4));
    // p -> label drives the loss to zero
    CHECK(nn::binary_cross_entropy(1.0 - 1e-13, 1).loss < 1e-9);
    CHECK(nn::binary_cross_entropy(1e-13, 0).loss < 1e-9);
    // direct evaluation: p = 0.9, label 0 -> ln 10
    CHECK(nn::binary_cross_entropy(0.9, 0).loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(nn::binary_cross_entropy(0.9, 0).loss == doctest::Approx(2.3026).epsilon(1e-4));
}

TEST_CASE("adam first step with unit gradient moves by about -lr") {
    nn::Network net = nn::Network::build(1, {nn::LayerSpec::dense(1, 1, nn::Activation::None)});
    // theta = [w, b] = [0, 0]
    nn::AdamState state = nn::AdamState::for_network(net);
    const std::vector<double> grads = {1.0, 1.0};
    nn::adam_step(net, grads, state, 1e-3);
    CHECK(state.step == 1);
    for (double p : net.params()) {
        CHECK(std::abs(p + 1e-3) < 1e-9);  // bias-corrected first step = -lr * g/(|g|+eps)
    }
}

TEST_CASE("adam with zero gradient leaves parameters unchanged but advances the step") {
    Rng rng(3);
    nn::Network net = nn::Network::build(2, {nn::LayerSpec::dense(2, 2, nn::Activation::None)});
    net.init_params(rng);
    const std::vector<double> before = net.params();
    nn::AdamState state = nn::AdamState::for_network(net);
    nn::adam_step(net, std::vector<double>(net.param_count(), 0.0), state, 1e-3);
    CHECK(state.step == 1);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(net.params()[i] == before[i]);
}

TEST_CASE("adam with lr = 0 is a bit-exact no-op on parameters") {
    Rng rng(4);
    nn::Network net = nn::Network::build(3, {nn::LayerSpec::dense(3, 5, nn::Activation::Tanh)});
    net.init_params(rng);
    const std::vector<double> before = net.params();
    nn::AdamState state = nn::AdamState::for_network(net);
    std::vector<double> grads(net.param_count());
    for (auto& g : grads) g = rng.normal();
    nn::adam_step(net, grads, state, 0.0);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(net.params()[i] == before[i]);
}

TEST_CASE("two adam steps with constant gradient match a scripted recomputation") {
    nn::Network net = nn::Network::build(1, {nn::LayerSpec::dense(1, 1, nn::Activation::None)});
    nn::AdamState state = nn::AdamState::for_network(net);
    const double g = 0.37;
    const double lr = 1e-2;
    nn::adam_step(net, {g, g}, state, lr);
    nn::adam_step(net, {g, g}, state, lr);

    // independent scripted recomputation
    double theta = 0.0, m = 0.0, v = 0.0;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        theta -= lr * mh / (std::sqrt(vh) + eps);
    }
    for (double p : net.params()) CHECK(p == doctest::Approx(theta).epsilon(1e-12));
}

TEST_CASE("frozen networks reject optimizer steps but still produce gradients") {
    Rng rng(9);
    nn::Network net = nn::Network::build(2, {nn::LayerSpec::dense(2, 2, nn::Activation::Tanh)});
    net.init_params(rng);
    Tensor x({1, 2}, {0.4, -0.9});
    nn::Tape tape;
    net.forward(x, 1, tape);
    net.freeze();
    Tensor g({1, 2}, {1.0, -1.0});
    const auto bw = net.backward(tape, g);  // grads still computable
    CHECK(bw.param_grads.size() == net.param_count());
    nn::AdamState state = nn::AdamState::for_network(net);
    CHECK_THROWS_AS(nn::adam_step(net, bw.param_grads, state, 1e-3), UsageError);
}
