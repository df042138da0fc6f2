#include "cwnet/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cwnet/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight container I/O assumes a little-endian host");

namespace cwnet::nn {

namespace {

constexpr char kMagic[5] = {'C', 'W', 'N', 'E', 'T'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw PersistenceError(path + ": truncated weight file");
    return v;
}

}  // namespace

void save_params(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError(path + ": cannot open for writing");

    out.write(kMagic, sizeof(kMagic));
    put<std::uint16_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.input_size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
    for (const ResolvedLayer& r : net.layers()) {
        put<std::uint8_t>(out, static_cast<std::uint8_t>(r.spec.kind));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(r.spec.activation));
        if (r.spec.kind == LayerSpec::Kind::Dense) {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(r.spec.in_size));
            put<std::uint32_t>(out, static_cast<std::uint32_t>(r.spec.out_size));
        } else {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(r.spec.filters));
            put<std::uint32_t>(out, static_cast<std::uint32_t>(r.spec.kernel));
            put<std::uint32_t>(out, static_cast<std::uint32_t>(r.spec.stride));
        }
    }
    put<std::uint64_t>(out, static_cast<std::uint64_t>(net.param_count()));
    out.write(reinterpret_cast<const char*>(net.params().data()),
              static_cast<std::streamsize>(net.param_count() * sizeof(double)));
    if (!out) throw PersistenceError(path + ": write failed");
}

void load_params(Network& net, const std::string& path) {
    if (net.frozen()) throw UsageError("load_params on a frozen network");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PersistenceError(path + ": cannot open for reading");

    char magic[5];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw PersistenceError(path + ": bad magic, not a CWNET weight file");
    }
    const auto version = get<std::uint16_t>(in, path);
    if (version != kVersion) {
        throw PersistenceError(path + ": unsupported format version " + std::to_string(version));
    }
    const auto input = get<std::uint32_t>(in, path);
    if (input != net.input_size()) {
        throw PersistenceError(path + ": input width mismatch");
    }
    const auto layer_count = get<std::uint32_t>(in, path);
    if (layer_count != net.layers().size()) {
        throw PersistenceError(path + ": layer count mismatch");
    }
    for (const ResolvedLayer& r : net.layers()) {
        const auto kind = get<std::uint8_t>(in, path);
        const auto act = get<std::uint8_t>(in, path);
        if (kind != static_cast<std::uint8_t>(r.spec.kind) ||
            act != static_cast<std::uint8_t>(r.spec.activation)) {
            throw PersistenceError(path + ": layer record mismatch");
        }
        if (r.spec.kind == LayerSpec::Kind::Dense) {
            const auto in_size = get<std::uint32_t>(in, path);
            const auto out_size = get<std::uint32_t>(in, path);
            if (in_size != r.spec.in_size || out_size != r.spec.out_size) {
                throw PersistenceError(path + ": dense shape mismatch");
            }
        } else {
            const auto filters = get<std::uint32_t>(in, path);
            const auto kernel = get<std::uint32_t>(in, path);
            const auto stride = get<std::uint32_t>(in, path);
            if (filters != r.spec.filters || kernel != r.spec.kernel ||
                stride != r.spec.stride) {
                throw PersistenceError(path + ": conv shape mismatch");
            }
        }
    }
    const auto count = get<std::uint64_t>(in, path);
    if (count != net.param_count()) {
        throw PersistenceError(path + ": parameter count mismatch");
    }
    std::vector<double> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw PersistenceError(path + ": truncated weight file");
    net.params() = std::move(buf);
    net.bump_version();
}

}  // namespace cwnet::nn
