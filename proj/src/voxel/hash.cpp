#include "gq/hash.hpp"

#include <openssl/sha.h>

namespace gq {

Digest sha256(std::span<const std::uint8_t> bytes) {
    Digest d{};
    SHA256(bytes.data(), bytes.size(), d.data());
    return d;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        s += kHex[b >> 4];
        s += kHex[b & 15];
    }
    return s;
}

}  // namespace gq
