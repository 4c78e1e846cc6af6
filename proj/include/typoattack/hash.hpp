#pragma once

#include <cstdint>
#include <string_view>

namespace typoattack {

// 64-bit FNV-1a over a byte sequence. Used for the patient split hash,
// vocabulary fingerprints and seed derivation, so it must stay fixed.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t state = 14695981039346656037ull) {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= 1099511628211ull;
    }
    return state;
}

// FNV-1a of (salt as 8 little-endian bytes || payload).
inline std::uint64_t salted_hash(std::uint64_t salt, std::string_view payload) {
    char prefix[8];
    for (int i = 0; i < 8; ++i)
        prefix[i] = static_cast<char>((salt >> (8 * i)) & 0xff);
    return fnv1a64(payload, fnv1a64(std::string_view(prefix, 8)));
}

// salted_hash projected onto [0, 1). Top 53 bits so the result is an
// exactly representable double strictly below 1.
inline double unit_hash(std::uint64_t salt, std::string_view payload) {
    return static_cast<double>(salted_hash(salt, payload) >> 11) * 0x1p-53;
}

// Stable fan-out of one global seed into independent per-component streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view component) {
    return salted_hash(seed, component);
}

}  // namespace typoattack
