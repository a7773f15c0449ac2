#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

namespace splatpiv::bytes {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T read_le(const std::uint8_t* p) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8 || sizeof(T) == 2);
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    }
    T out;
    std::memcpy(&out, buf, sizeof(T));
    return out;
}

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    }
    out.insert(out.end(), buf, buf + sizeof(T));
}

}  // namespace splatpiv::bytes
