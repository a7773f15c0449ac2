#pragma once

#include "splatpiv/config.hpp"
#include "splatpiv/particles.hpp"
#include "splatpiv/rng.hpp"

#include <span>
#include <utility>
#include <vector>

namespace splatpiv {

class ThreadPool;

/// Row-major float intensities. Pixel (row j, col i) is centred at (x = i, y = j).
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w) : height(h), width(w), pixels(std::size_t(h) * w, 0.0f) {}

    float& at(int row, int col) noexcept { return pixels[std::size_t(row) * width + col]; }
    float at(int row, int col) const noexcept { return pixels[std::size_t(row) * width + col]; }

    friend bool operator==(const Image&, const Image&) = default;
};

/// Square window of kernel values around the pixel nearest to a particle.
struct KernelPatch {
    int side = 0;
    int anchor_col = 0;   // pixel holding the window centre
    int anchor_row = 0;
    Vec2 center;          // true sub-pixel particle position
    std::vector<float> values;  // side x side, row-major
};

/// Elliptical Gaussian particle model evaluated at `at`.
double eval_particle(const ParticleAppearance& a, Vec2 center, Vec2 at);

/// Smallest odd integer >= scale * max_diameter + 1.
int patch_side(double max_diameter, double scale = 3.0);

KernelPatch make_patch(const ParticleAppearance& a, Vec2 center, int side);

/// Sum of every contributing particle's patch (raw, unclamped).
Image splat(const ParticleSet& set, int frame, int height, int width, int side,
            ThreadPool* pool = nullptr);

/// Untruncated O(N*H*W) reference renderer.
Image render_oracle(const ParticleSet& set, int frame, int height, int width);

/// clamp(raw + offset + N(0, std^2), 0, 1) per pixel, keyed by pixel index.
Image finalize(Image raw, const NoiseConfig& noise, const RngKey& key, ThreadPool* pool = nullptr);

/// Monotone 256-level CDF matching onto `target` (bin weights, positive sum).
Image match_histogram(const Image& img, std::span<const double> target);

/// Both frames of a pair: match_histogram?(finalize(splat(...))).
std::pair<Image, Image> render_pair(const ParticleSet& set, int height, int width, int side,
                                    const NoiseConfig& noise, std::span<const double> target_histogram,
                                    const PairKeys& keys, ThreadPool* pool = nullptr);

}  // namespace splatpiv
