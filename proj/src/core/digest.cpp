#include "etsfs/core/digest.hpp"

#include <zlib.h>

#include <cstdio>

namespace etsfs {

std::string Digest::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

std::uint32_t crc32(std::span<const std::byte> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for large buffers
    const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
    std::size_t remaining = bytes.size();
    while (remaining > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(remaining, 1u << 30));
        crc = ::crc32(crc, data, chunk);
        data += chunk;
        remaining -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

} // namespace etsfs
