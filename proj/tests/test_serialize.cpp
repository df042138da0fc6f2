#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cwnet/covert.hpp"
#include "cwnet/errors.hpp"
#include "cwnet/serialize.hpp"

using namespace cwnet;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("save/load round trip is bit-exact") {
    Rng rng(77);
    nn::Network net = covert::build_bob(8, 1);
    net.init_params(rng);
    const std::vector<double> original = net.params();

    const std::string path = temp_path("cwnet_roundtrip.cwnet");
    nn::save_params(net, path);

    nn::Network other = covert::build_bob(8, 1);
    nn::load_params(other, path);
    REQUIRE(other.param_count() == original.size());
    for (std::size_t i = 0; i < original.size(); ++i) CHECK(other.params()[i] == original[i]);

    // Loaded params reproduce identical forward outputs.
    Tensor x({2, 16});
    Rng in_rng(5);
    for (auto& v : x.data) v = in_rng.normal();
    const Tensor y1 = net.forward(x, 2);
    const Tensor y2 = other.forward(x, 2);
    for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);
    std::remove(path.c_str());
}

TEST_CASE("truncated weight files are rejected") {
    Rng rng(78);
    nn::Network net = covert::build_willie(8);
    net.init_params(rng);
    const std::string path = temp_path("cwnet_truncated.cwnet");
    nn::save_params(net, path);

    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size / 2);
    nn::Network other = covert::build_willie(8);
    CHECK_THROWS_AS(nn::load_params(other, path), PersistenceError);
    std::remove(path.c_str());
}

TEST_CASE("shape and magic mismatches are rejected") {
    Rng rng(79);
    nn::Network net = covert::build_bob(8, 1);
    net.init_params(rng);
    const std::string path = temp_path("cwnet_mismatch.cwnet");
    nn::save_params(net, path);

    nn::Network wider = covert::build_bob(8, 2);  // different terminal width
    CHECK_THROWS_AS(nn::load_params(wider, path), PersistenceError);

    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << "NOTCWNETFILE.............";
    }
    nn::Network same = covert::build_bob(8, 1);
    CHECK_THROWS_AS(nn::load_params(same, path), PersistenceError);
    std::remove(path.c_str());
}

TEST_CASE("loading into a frozen network is rejected") {
    Rng rng(80);
    nn::Network net = covert::build_willie(8);
    net.init_params(rng);
    const std::string path = temp_path("cwnet_frozen.cwnet");
    nn::save_params(net, path);
    net.freeze();
    CHECK_THROWS_AS(nn::load_params(net, path), UsageError);
    std::remove(path.c_str());
}
