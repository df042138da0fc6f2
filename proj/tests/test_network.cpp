#include <doctest.h>

#include <cmath>

#include "cwnet/autoencoder.hpp"
#include "cwnet/covert.hpp"
#include "cwnet/errors.hpp"
#include "cwnet/network.hpp"

using namespace cwnet;
using nn::Activation;
using nn::LayerSpec;
using nn::Network;

TEST_CASE("dense identity layer passes input through") {
    Network net = Network::build(3, {LayerSpec::dense(3, 3, Activation::None)});
    // weights = identity, bias = 0
    for (std::size_t i = 0; i < 3; ++i) net.params()[i * 3 + i] = 1.0;
    net.bump_version();

    Tensor x({2, 3}, {1.0, -2.0, 0.5, 3.0, 0.0, -1.0});
    const Tensor y = net.forward(x, 2);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(0));
}

TEST_CASE("terminal softmax on zero logits is uniform") {
    Network net = Network::build(4, {LayerSpec::dense(4, 4, Activation::Softmax)});
    Tensor x({1, 4});
    const Tensor y = net.forward(x, 1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax rows are nonnegative and sum to one") {
    Rng rng(5);
    Network net = Network::build(
        6, {LayerSpec::dense(6, 10, Activation::Tanh), LayerSpec::dense(10, 8, Activation::Softmax)});
    net.init_params(rng);
    Tensor x({16, 6});
    for (auto& v : x.data) v = rng.uniform(-4.0, 4.0);
    const Tensor y = net.forward(x, 16);
    for (std::size_t r = 0; r < 16; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 8; ++c) {
            CHECK(y[r * 8 + c] >= 0.0);
            sum += y[r * 8 + c];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("covert decoder stack maps a 2x8 block to a distribution over 2^k") {
    for (std::size_t k_c : {1, 2, 4}) {
        Rng rng(17 + k_c);
        Network bob = covert::build_bob(8, k_c);
        bob.init_params(rng);
        CHECK(bob.input_size() == 16);
        CHECK(bob.output_size() == (std::size_t{1} << k_c));
        Tensor x({3, 16});
        for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
        const Tensor y = bob.forward(x, 3);
        for (std::size_t r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < bob.output_size(); ++c) sum += y[r * bob.output_size() + c];
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("forward is deterministic for identical params and input") {
    Rng rng(23);
    Network net = covert::build_willie(8);
    net.init_params(rng);
    Tensor x({4, 16});
    for (auto& v : x.data) v = rng.normal();
    const Tensor y1 = net.forward(x, 4);
    const Tensor y2 = net.forward(x, 4);
    for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);
}

TEST_CASE("shape validation rejects inconsistent stacks") {
    CHECK_THROWS_AS(Network::build(4, {LayerSpec::dense(5, 3, Activation::None)}), ConfigError);
    CHECK_THROWS_AS(Network::build(4, {LayerSpec::dense(4, 4, Activation::Softmax),
                                       LayerSpec::dense(4, 2, Activation::None)}),
                    ConfigError);
    // conv kernel longer than the sequence
    CHECK_THROWS_AS(Network::build(3, {LayerSpec::conv1d(2, 5, 1, Activation::Tanh)}),
                    ConfigError);
    // forward with a wrong input width
    Network net = Network::build(4, {LayerSpec::dense(4, 2, Activation::None)});
    Tensor bad({1, 3});
    CHECK_THROWS_AS(net.forward(bad, 1), ConfigError);
}

TEST_CASE("stale tape is rejected after a parameter mutation") {
    Rng rng(31);
    Network net = Network::build(4, {LayerSpec::dense(4, 2, Activation::Tanh)});
    net.init_params(rng);
    Tensor x({1, 4}, {0.3, -0.1, 0.8, 0.0});
    nn::Tape tape;
    net.forward(x, 1, tape);
    net.params()[0] += 0.5;
    net.bump_version();
    Tensor g({1, 2}, {1.0, 0.0});
    CHECK_THROWS_AS(net.backward(tape, g), UsageError);
}

TEST_CASE("table architectures resolve to the expected shapes") {
    // Encoder/decoder of the (8,4) system.
    Network enc = ae::build_encoder(8, 4);
    CHECK(enc.input_size() == 16);
    CHECK(enc.output_size() == 16);
    Network dec = ae::build_decoder(8, 4);
    CHECK(dec.input_size() == 16);
    CHECK(dec.output_size() == 16);
    Network est = ae::build_estimator(8);
    CHECK(est.input_size() == 16);
    CHECK(est.output_size() == 2);
    Network pre = ae::build_pre_decoder(2, 8);
    CHECK(pre.input_size() == 2 * 16);
    CHECK(pre.output_size() == 2 * 32);
    Network head = ae::build_decoder_head(2, 8, 4);
    CHECK(head.input_size() == 2 * 32);
    CHECK(head.output_size() == 16);

    // Small-block configs stay buildable (conv stages that do not fit are
    // skipped).
    CHECK_NOTHROW(ae::build_encoder(2, 1));
    CHECK_NOTHROW(ae::build_decoder(4, 2));
}
