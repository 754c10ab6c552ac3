#ifndef DEMNET_DIGEST_HPP
#define DEMNET_DIGEST_HPP

#include <array>
#include <cstdint>
#include <string>

namespace demnet {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 of a byte string.
Digest sha256(const std::string& bytes);

/// SHA-256 of a file's contents; throws if unreadable.
Digest sha256_file(const std::string& path);

std::string digest_hex(const Digest& d);

}  // namespace demnet

#endif  // DEMNET_DIGEST_HPP
