#pragma once

#include <string>

#include "cwnet/network.hpp"

namespace cwnet::nn {

// Versioned weight container (documented byte-exactly in docs/formats.md):
// magic "CWNET", u16 format version, u32 input width, u32 layer count,
// per-layer shape record, u64 parameter count, then the raw little-endian
// 64-bit parameter array. Round trips are bit-exact.

void save_params(const Network& net, const std::string& path);

// Validates magic, version and every layer record against net before
// touching its parameters; throws PersistenceError on any mismatch or
// truncation.
void load_params(Network& net, const std::string& path);

}  // namespace cwnet::nn
