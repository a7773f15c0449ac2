#include "splatpiv/export.hpp"

#include "splatpiv/error.hpp"

#include "byte_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>

namespace splatpiv {

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

struct ReadCursor {
    ByteView blob;
    std::size_t offset = 0;
};

void read_bytes(png_structp png, png_bytep data, png_size_t length) {
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + length > cursor->blob.size()) png_error(png, "truncated png");
    std::memcpy(data, cursor->blob.data() + cursor->offset, length);
    cursor->offset += length;
}

void raise_png_error(png_structp png, png_const_charp message) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    *text = message;
    png_longjmp(png, 1);
}

void ignore_png_warning(png_structp, png_const_charp) {}

nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.min, r.max}); }

}  // namespace

std::string pair_stem(std::uint64_t batch, std::size_t pair) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "pair_%06llu_%04zu", static_cast<unsigned long long>(batch), pair);
    return buf;
}

std::uint16_t quantize16(float value) noexcept {
    const double scaled = std::clamp(double(value), 0.0, 1.0) * 65535.0;
    return static_cast<std::uint16_t>(std::lround(scaled));
}

Bytes encode_png16(const Image& img) {
    Bytes out;
    std::string error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, raise_png_error, ignore_png_warning);
    if (png == nullptr) throw IoError("png: cannot allocate writer");
    png_infop info = png_create_info_struct(png);

    // Samples are stored big-endian, as the format requires.
    std::vector<std::uint8_t> row(std::size_t(img.width) * 2);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: encode failed: " + error);
    }
    png_set_write_fn(png, &out, append_bytes, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const std::uint16_t s = quantize16(img.at(r, c));
            row[2 * std::size_t(c)] = static_cast<std::uint8_t>(s >> 8);
            row[2 * std::size_t(c) + 1] = static_cast<std::uint8_t>(s & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Png16 decode_png16(ByteView blob) {
    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, raise_png_error, ignore_png_warning);
    if (png == nullptr) throw IoError("png: cannot allocate reader");
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{blob};
    Png16 out;
    std::vector<std::uint8_t> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: decode failed: " + error);
    }
    png_set_read_fn(png, &cursor, read_bytes);
    png_read_info(png, info);
    if (png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
        png_error(png, "not a 16-bit grayscale image");
    }
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.samples.resize(std::size_t(out.width) * out.height);
    row.resize(std::size_t(out.width) * 2);
    for (int r = 0; r < out.height; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < out.width; ++c) {
            out.samples[std::size_t(r) * out.width + c] =
                static_cast<std::uint16_t>((row[2 * std::size_t(c)] << 8) | row[2 * std::size_t(c) + 1]);
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

Bytes encode_raw_f32(const Image& img) {
    Bytes out;
    out.reserve(8 + img.pixels.size() * 4);
    bytes::append_le(out, std::int32_t{img.height});
    bytes::append_le(out, std::int32_t{img.width});
    for (float v : img.pixels) bytes::append_le(out, v);
    return out;
}

Image decode_raw_f32(ByteView blob) {
    if (blob.size() < 8) throw FormatError(FormatError::Kind::truncated, "raw_f32: missing header");
    const auto height = bytes::read_le<std::int32_t>(blob.data());
    const auto width = bytes::read_le<std::int32_t>(blob.data() + 4);
    if (height <= 0 || width <= 0) throw FormatError(FormatError::Kind::bad_dimensions, "raw_f32: bad dimensions");
    Image img(height, width);
    if (blob.size() != 8 + img.pixels.size() * 4) {
        throw FormatError(FormatError::Kind::truncated, "raw_f32: payload size mismatch");
    }
    for (std::size_t k = 0; k < img.pixels.size(); ++k) img.pixels[k] = bytes::read_le<float>(blob.data() + 8 + 4 * k);
    return img;
}

nlohmann::json params_sidecar(const ImagePairBatch& batch, const GeneratorConfig& cfg) {
    const std::string ext = cfg.output.format == OutputFormat::png16 ? ".png" : ".raw";
    nlohmann::json pairs = nlohmann::json::array();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PairParams& p = batch.params[i];
        const std::size_t source_index = batch.flow_source_indices[i];
        const FlowSource& source = cfg.flow_sources.at(source_index);
        const std::string stem = pair_stem(batch.batch_index, i);

        nlohmann::json diameters = nlohmann::json::array();
        for (float d : p.diameters) diameters.push_back(d);

        pairs.push_back({
            {"pair", i},
            {"image1", stem + "_a" + ext},
            {"image2", stem + "_b" + ext},
            {"flow", stem + "_flow.flo"},
            {"flow_source_index", source_index},
            {"flow_source", source.format == FlowFormat::function ? source.function : source.path},
            {"seeding_density", p.seeding_density},
            {"particle_count", p.particle_count},
            {"active_count", p.active_count},
            {"patch_side", p.patch_side},
            {"intensity_realized", range_json(p.intensity_realized)},
            {"diameter_realized", range_json(p.diameter_realized)},
            {"rho_realized", range_json(p.rho_realized)},
            {"diameters", std::move(diameters)},
        });
    }
    return {
        {"schema_version", kSidecarSchemaVersion},
        {"batch_index", batch.batch_index},
        {"image_height", batch.height},
        {"image_width", batch.width},
        {"seed", cfg.seed},
        {"pairs", std::move(pairs)},
    };
}

}  // namespace splatpiv
