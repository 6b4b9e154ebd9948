#pragma once

// Internal header for the on-disk tensor container shared by checkpoints and
// incremental-state caches: magic, format version, a JSON header describing
// the tensors, then the flat little-endian payload in header order.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace evalm::io {

inline constexpr char kMagic[4] = {'E', 'V', 'L', 'M'};
inline constexpr uint32_t kFormatVersion = 1;

struct TensorBlob {
    const void* data;
    size_t bytes;
};

void write_container(const std::string& path, const nlohmann::json& header,
                     const std::vector<TensorBlob>& blobs);

struct Container {
    nlohmann::json header;
    std::vector<char> payload;
};

Container read_container(const std::string& path);

}  // namespace evalm::io
