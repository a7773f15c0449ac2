#pragma once

#include "splatpiv/flowfield.hpp"
#include "splatpiv/pipeline.hpp"
#include "splatpiv/raster.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace splatpiv {

inline constexpr int kSidecarSchemaVersion = 1;

/// Intensity in [0, 1] to a 16-bit sample: round(v * 65535).
std::uint16_t quantize16(float value) noexcept;

/// Grayscale 16-bit PNG.
Bytes encode_png16(const Image& img);

struct Png16 {
    int height = 0;
    int width = 0;
    std::vector<std::uint16_t> samples;
};
Png16 decode_png16(ByteView blob);

/// int32 height, int32 width (little-endian), then row-major float32.
Bytes encode_raw_f32(const Image& img);
Image decode_raw_f32(ByteView blob);

/// File-name stem shared by the outputs of one pair: pair_{batch:06}_{pair:04}.
std::string pair_stem(std::uint64_t batch, std::size_t pair);

/// Per-batch parameter record written next to the images.
nlohmann::json params_sidecar(const ImagePairBatch& batch, const GeneratorConfig& cfg);

}  // namespace splatpiv
