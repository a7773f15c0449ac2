#pragma once

#include "splatpiv/config.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace splatpiv {

/// Position or displacement in pixels; x grows rightwards, y downwards.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/**
 * Regular grid of pixel displacements.
 *
 * Sample (row j, column i) sits at position (x = i, y = j). Both
 * components are stored row-major and are always finite.
 */
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> u;
    std::vector<float> v;

    FlowField() = default;
    FlowField(int h, int w) : height(h), width(w), u(std::size_t(h) * w), v(std::size_t(h) * w) {}

    std::size_t size() const noexcept { return u.size(); }
    std::size_t index(int row, int col) const noexcept { return std::size_t(row) * width + col; }

    friend bool operator==(const FlowField&, const FlowField&) = default;
};

/// Middlebury .flo decode; throws FormatError.
FlowField load_flo(ByteView blob);
Bytes write_flo(const FlowField& field);

/// N x 4 (x, y, u, v) .npy array on a complete regular grid; throws FormatError.
FlowField load_npy_xyuv(ByteView blob);

/// Two equally shaped rank-2 datasets; throws IoError or FormatError.
FlowField load_hdf5(const std::filesystem::path& path, const std::string& u_dataset,
                    const std::string& v_dataset);

using FlowFunction = std::function<Vec2(double x, double y)>;

/// Evaluate `f` at every grid node; throws FormatError on non-finite output.
FlowField from_function(const FlowFunction& f, int height, int width);

/// Registered analytic fields usable from configuration files:
///   constant [u, v]
///   linear   [u0, du/dx, du/dy, v0, dv/dx, dv/dy]
///   rotation [omega]            rigid rotation about the image centre
///   shear    [rate]             u = rate * (y - cy)
///   taylor_green [amplitude, wavelength]
FlowFunction named_function(const std::string& name, const std::vector<double>& params,
                            int height, int width);

/// Bilinear interpolation with edge clamping; total for finite positions.
Vec2 sample_flow(const FlowField& field, Vec2 position);
std::vector<Vec2> sample_flow(const FlowField& field, std::span<const Vec2> positions);

/// Sample `field` on an height x width pixel grid (crop or edge-replicate, no rescaling).
FlowField resample_to(const FlowField& field, int height, int width);

/// Load any configured source on to an height x width grid, applying its scale factor.
FlowField load_source(const FlowSource& source, int height, int width);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView bytes);

}  // namespace splatpiv
