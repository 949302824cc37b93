#pragma once

#include <cstdint>
#include <string_view>

namespace promptvar {

// 64-bit FNV-1a. Stable across platforms; used for fixture keys and feature hashing.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace promptvar
