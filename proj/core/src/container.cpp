#include "container.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace evalm::io {

void write_container(const std::string& path, const nlohmann::json& header,
                     const std::vector<TensorBlob>& blobs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);

    out.write(kMagic, 4);
    uint32_t version = kFormatVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::string htext = header.dump();
    uint64_t hlen = htext.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& blob : blobs) {
        out.write(static_cast<const char*>(blob.data), static_cast<std::streamsize>(blob.bytes));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Container read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not an EVLM container: " + path);
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported container version in " + path);
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("truncated container header: " + path);

    Container c;
    c.header = nlohmann::json::parse(htext);
    c.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return c;
}

}  // namespace evalm::io
