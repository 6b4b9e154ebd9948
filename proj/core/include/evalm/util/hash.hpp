#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace evalm::util {

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

// Streaming FNV-1a; used for content digests and string hashing.
struct Fnv64 {
    uint64_t h = kFnvOffset;

    void update(const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= kFnvPrime;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    template <class T>
    void update_value(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        update(&v, sizeof(v));
    }
    uint64_t digest() const { return h; }
};

inline uint64_t fnv1a64(std::string_view s) {
    Fnv64 f;
    f.update(s);
    return f.digest();
}

inline uint64_t fnv1a64(const void* p, size_t n) {
    Fnv64 f;
    f.update(p, n);
    return f.digest();
}

}  // namespace evalm::util
