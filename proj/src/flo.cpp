#include "splatpiv/error.hpp"
#include "splatpiv/flowfield.hpp"

#include "byte_io.hpp"

#include <cmath>

namespace splatpiv {

namespace {

constexpr float kFloMagic = 202021.25f;  // "PIEH" little-endian
constexpr std::size_t kFloHeader = 12;

}  // namespace

FlowField load_flo(ByteView blob) {
    if (blob.size() < 4) throw FormatError(FormatError::Kind::truncated, ".flo: missing header");
    if (bytes::read_le<float>(blob.data()) != kFloMagic) {
        throw FormatError(FormatError::Kind::bad_magic, ".flo: bad magic (expected 202021.25)");
    }
    if (blob.size() < kFloHeader) throw FormatError(FormatError::Kind::truncated, ".flo: truncated header");

    const auto width = bytes::read_le<std::int32_t>(blob.data() + 4);
    const auto height = bytes::read_le<std::int32_t>(blob.data() + 8);
    if (width <= 0 || height <= 0) {
        throw FormatError(FormatError::Kind::bad_dimensions,
                          ".flo: non-positive dimensions " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
    const std::size_t cells = std::size_t(width) * std::size_t(height);
    const std::size_t expected = kFloHeader + 8 * cells;
    if (blob.size() < expected) {
        throw FormatError(FormatError::Kind::truncated,
                          ".flo: truncated payload (" + std::to_string(blob.size()) + " of " +
                              std::to_string(expected) + " bytes)");
    }
    if (blob.size() > expected) {
        throw FormatError(FormatError::Kind::bad_dimensions, ".flo: trailing bytes after payload");
    }

    FlowField field(height, width);
    const std::uint8_t* p = blob.data() + kFloHeader;
    for (std::size_t k = 0; k < cells; ++k, p += 8) {
        const float u = bytes::read_le<float>(p);
        const float v = bytes::read_le<float>(p + 4);
        if (!std::isfinite(u) || !std::isfinite(v)) {
            throw FormatError(FormatError::Kind::non_finite,
                              ".flo: non-finite value at cell " + std::to_string(k));
        }
        field.u[k] = u;
        field.v[k] = v;
    }
    return field;
}

Bytes write_flo(const FlowField& field) {
    Bytes out;
    out.reserve(kFloHeader + 8 * field.size());
    bytes::append_le(out, kFloMagic);
    bytes::append_le(out, std::int32_t{field.width});
    bytes::append_le(out, std::int32_t{field.height});
    for (std::size_t k = 0; k < field.size(); ++k) {
        bytes::append_le(out, field.u[k]);
        bytes::append_le(out, field.v[k]);
    }
    return out;
}

}  // namespace splatpiv
