#include "splatpiv/raster.hpp"

#include "splatpiv/thread_pool.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace splatpiv {

namespace {

constexpr int kBandRows = 64;
constexpr int kFinalizeRows = 32;

/// Quadratic-form coefficients: value = I0 * exp(-(a dx^2 + b dx dy + c dy^2)).
struct Kernel {
    double intensity;
    double a;
    double b;
    double c;
    Vec2 center;
    int anchor_col;
    int anchor_row;
};

Kernel make_kernel(const ParticleAppearance& p, Vec2 center) {
    const double k = 1.0 / (2.0 * (1.0 - p.rho * p.rho));
    return {p.intensity,
            k / (p.sigma_x * p.sigma_x),
            -2.0 * k * p.rho / (p.sigma_x * p.sigma_y),
            k / (p.sigma_y * p.sigma_y),
            center,
            static_cast<int>(std::floor(center.x + 0.5)),
            static_cast<int>(std::floor(center.y + 0.5))};
}

/// Accumulate the part of one kernel's window that falls in rows [row_lo, row_hi).
void accumulate(Image& img, const Kernel& k, int half, int row_lo, int row_hi) {
    const int r0 = std::max(k.anchor_row - half, row_lo);
    const int r1 = std::min(k.anchor_row + half + 1, row_hi);
    const int c0 = std::max(k.anchor_col - half, 0);
    const int c1 = std::min(k.anchor_col + half + 1, img.width);
    if (r0 >= r1 || c0 >= c1) return;

    if (k.b == 0.0) {
        // Axis-aligned: the kernel factors into a row and a column profile.
        thread_local std::vector<double> column_profile;
        column_profile.resize(std::size_t(c1 - c0));
        for (int col = c0; col < c1; ++col) {
            const double dx = col - k.center.x;
            column_profile[std::size_t(col - c0)] = std::exp(-k.a * dx * dx);
        }
        for (int row = r0; row < r1; ++row) {
            const double dy = row - k.center.y;
            const double row_weight = k.intensity * std::exp(-k.c * dy * dy);
            float* out = &img.pixels[std::size_t(row) * img.width];
            for (int col = c0; col < c1; ++col) {
                out[col] = static_cast<float>(out[col] + row_weight * column_profile[std::size_t(col - c0)]);
            }
        }
        return;
    }

    for (int row = r0; row < r1; ++row) {
        const double dy = row - k.center.y;
        float* out = &img.pixels[std::size_t(row) * img.width];
        for (int col = c0; col < c1; ++col) {
            const double dx = col - k.center.x;
            const double q = k.a * dx * dx + k.b * dx * dy + k.c * dy * dy;
            out[col] = static_cast<float>(out[col] + k.intensity * std::exp(-q));
        }
    }
}

}  // namespace

double eval_particle(const ParticleAppearance& a, Vec2 center, Vec2 at) {
    const double dx = at.x - center.x;
    const double dy = at.y - center.y;
    const double form = dx * dx / (a.sigma_x * a.sigma_x) -
                        2.0 * a.rho * dx * dy / (a.sigma_x * a.sigma_y) +
                        dy * dy / (a.sigma_y * a.sigma_y);
    return a.intensity * std::exp(-form / (2.0 * (1.0 - a.rho * a.rho)));
}

int patch_side(double max_diameter, double scale) {
    const double exact = scale * max_diameter + 1.0;
    int side = static_cast<int>(std::ceil(exact - 1e-9 * exact));
    side = std::max(side, 1);
    return side % 2 == 0 ? side + 1 : side;
}

KernelPatch make_patch(const ParticleAppearance& a, Vec2 center, int side) {
    const Kernel k = make_kernel(a, center);
    const int half = side / 2;
    KernelPatch patch;
    patch.side = side;
    patch.anchor_col = k.anchor_col;
    patch.anchor_row = k.anchor_row;
    patch.center = center;
    patch.values.resize(std::size_t(side) * side);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const Vec2 at{double(k.anchor_col - half + c), double(k.anchor_row - half + r)};
            patch.values[std::size_t(r) * side + c] = static_cast<float>(eval_particle(a, center, at));
        }
    }
    return patch;
}

Image splat(const ParticleSet& set, int frame, int height, int width, int side, ThreadPool* pool) {
    Image img(height, width);
    const auto positions = set.positions(frame);
    const auto appearances = set.appearances(frame);
    const int half = side / 2;

    std::vector<Kernel> kernels;
    kernels.reserve(set.count());
    for (std::size_t i = 0; i < set.count(); ++i) {
        if (!set.contributes(i, frame)) continue;
        const Vec2 p = positions[i];
        if (!(p.x > -half - 1 && p.x < width + half && p.y > -half - 1 && p.y < height + half)) continue;
        kernels.push_back(make_kernel(appearances[i], p));
    }

    // Horizontal bands own disjoint rows. Each band walks its kernels in
    // sampling order, so every pixel sums its contributions in the same
    // order whatever the band or thread count.
    const int band_rows = std::max(kBandRows, side);
    const int bands = (height + band_rows - 1) / band_rows;
    if (pool == nullptr || pool->size() == 1 || bands == 1) {
        for (const Kernel& k : kernels) accumulate(img, k, half, 0, height);
        return img;
    }

    std::vector<std::vector<std::uint32_t>> buckets(static_cast<std::size_t>(bands));
    for (std::size_t n = 0; n < kernels.size(); ++n) {
        const int lo = std::clamp((kernels[n].anchor_row - half) / band_rows, 0, bands - 1);
        const int hi = std::clamp((kernels[n].anchor_row + half) / band_rows, 0, bands - 1);
        for (int b = lo; b <= hi; ++b) buckets[std::size_t(b)].push_back(static_cast<std::uint32_t>(n));
    }
    pool->parallel_for(buckets.size(), [&](std::size_t b) {
        const int row_lo = static_cast<int>(b) * band_rows;
        const int row_hi = std::min(row_lo + band_rows, height);
        for (std::uint32_t n : buckets[b]) accumulate(img, kernels[n], half, row_lo, row_hi);
    });
    return img;
}

Image render_oracle(const ParticleSet& set, int frame, int height, int width) {
    Image img(height, width);
    const auto positions = set.positions(frame);
    const auto appearances = set.appearances(frame);
    std::vector<double> acc(img.pixels.size(), 0.0);
    for (std::size_t i = 0; i < set.count(); ++i) {
        if (!set.contributes(i, frame)) continue;
        for (int row = 0; row < height; ++row) {
            for (int col = 0; col < width; ++col) {
                acc[std::size_t(row) * width + col] +=
                    eval_particle(appearances[i], positions[i], {double(col), double(row)});
            }
        }
    }
    for (std::size_t k = 0; k < acc.size(); ++k) img.pixels[k] = static_cast<float>(acc[k]);
    return img;
}

Image finalize(Image raw, const NoiseConfig& noise, const RngKey& key, ThreadPool* pool) {
    const std::size_t width = static_cast<std::size_t>(raw.width);
    auto process_rows = [&](int row_lo, int row_hi) {
        for (std::size_t k = std::size_t(row_lo) * width; k < std::size_t(row_hi) * width; ++k) {
            double v = raw.pixels[k] + noise.background_offset;
            if (noise.gaussian_std > 0.0) v += noise.gaussian_std * key.normal(k);
            raw.pixels[k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    };
    const int chunks = (raw.height + kFinalizeRows - 1) / kFinalizeRows;
    if (pool != nullptr && noise.gaussian_std > 0.0 && chunks > 1) {
        pool->parallel_for(std::size_t(chunks), [&](std::size_t c) {
            const int lo = static_cast<int>(c) * kFinalizeRows;
            process_rows(lo, std::min(lo + kFinalizeRows, raw.height));
        });
    } else {
        process_rows(0, raw.height);
    }
    return raw;
}

Image match_histogram(const Image& img, std::span<const double> target) {
    constexpr int kLevels = 256;
    const auto quantize = [](float v) {
        return static_cast<int>(std::clamp(std::lround(double(v) * (kLevels - 1)), 0L, long(kLevels - 1)));
    };

    std::array<double, kLevels> source{};
    for (float v : img.pixels) source[std::size_t(quantize(v))] += 1.0;

    std::array<double, kLevels> target_cdf{};
    double running = 0.0;
    for (int t = 0; t < kLevels; ++t) {
        running += t < static_cast<int>(target.size()) ? target[std::size_t(t)] : 0.0;
        target_cdf[std::size_t(t)] = running;
    }
    const double target_total = running;
    const double source_total = static_cast<double>(img.pixels.size());

    // Each source level goes to the first target level whose CDF reaches the
    // level's mid-rank (cdf_before + count / 2). Mid-ranks keep the map the
    // identity when matching an image to its own histogram.
    std::array<float, kLevels> lut{};
    double before = 0.0;
    int t = 0;
    for (int s = 0; s < kLevels; ++s) {
        const double twice_mid = 2.0 * before + source[std::size_t(s)];
        while (t < kLevels - 1 && target_cdf[std::size_t(t)] * 2.0 * source_total < twice_mid * target_total) ++t;
        lut[std::size_t(s)] = static_cast<float>(t) / float(kLevels - 1);
        before += source[std::size_t(s)];
    }

    Image out(img.height, img.width);
    for (std::size_t k = 0; k < img.pixels.size(); ++k) out.pixels[k] = lut[std::size_t(quantize(img.pixels[k]))];
    return out;
}

std::pair<Image, Image> render_pair(const ParticleSet& set, int height, int width, int side,
                                    const NoiseConfig& noise, std::span<const double> target_histogram,
                                    const PairKeys& keys, ThreadPool* pool) {
    auto frame = [&](int f) {
        Image img = finalize(splat(set, f, height, width, side, pool), noise, keys.noise(f), pool);
        if (!target_histogram.empty()) img = match_histogram(img, target_histogram);
        return img;
    };
    return {frame(1), frame(2)};
}

}  // namespace splatpiv
