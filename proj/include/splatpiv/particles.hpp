#pragma once

#include "splatpiv/config.hpp"
#include "splatpiv/flowfield.hpp"
#include "splatpiv/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace splatpiv {

/// Parameters of one particle image. I0 == 0 encodes a masked particle.
struct ParticleAppearance {
    double intensity = 0.0;
    double sigma_x = 1.0;
    double sigma_y = 1.0;
    double rho = 0.0;

    friend bool operator==(const ParticleAppearance&, const ParticleAppearance&) = default;
};

/// Perturbed correlations are kept inside (-1 + eps, 1 - eps).
inline constexpr double kRhoMargin = 1e-3;
/// Perturbed spreads never drop below this many pixels.
inline constexpr double kMinSigma = 1e-3;

/**
 * All particles of one image pair, in sampling order.
 *
 * The allocated count never changes inside a run; density and hiding
 * are expressed through the masks so buffers keep a constant shape.
 */
struct ParticleSet {
    std::vector<Vec2> pos1;
    std::vector<Vec2> pos2;
    std::vector<ParticleAppearance> app1;
    std::vector<ParticleAppearance> app2;
    std::vector<std::uint8_t> active;
    std::vector<std::uint8_t> visible1;
    std::vector<std::uint8_t> visible2;

    std::size_t count() const noexcept { return pos1.size(); }

    std::span<const Vec2> positions(int frame) const noexcept { return frame == 1 ? pos1 : pos2; }
    std::span<const ParticleAppearance> appearances(int frame) const noexcept {
        return frame == 1 ? app1 : app2;
    }

    /// True when particle i adds intensity to `frame` (1 or 2).
    bool contributes(std::size_t i, int frame) const noexcept {
        const auto& visible = frame == 1 ? visible1 : visible2;
        const auto& app = frame == 1 ? app1 : app2;
        return active[i] && visible[i] && app[i].intensity > 0.0;
    }
};

/// Generation parameters realized for one pair.
struct PairParams {
    double seeding_density = 0.0;
    std::size_t particle_count = 0;
    std::size_t active_count = 0;
    /// Per-particle diameter d_i (max of the two axes with independent_axes).
    std::vector<float> diameters;
    /// max(d_i) over all allocated particles, at full precision.
    double max_diameter = 0.0;
    /// Ranges realized over the active particles of frame 1.
    Range intensity_realized;
    Range diameter_realized;
    Range rho_realized;
    /// Filled by the renderer.
    int patch_side = 0;
};

struct SampledParticles {
    ParticleSet set;
    PairParams params;
};

/// Frame-1 positions and appearances plus the realized density mask; pos2/app2 mirror frame 1.
SampledParticles sample_particles(const PairKeys& keys, const GeneratorConfig& cfg);

/// Zero-mean Gaussian perturbation of each appearance parameter, then clamping.
std::vector<ParticleAppearance> perturb_frame2(const RngKey& key, std::span<const ParticleAppearance> app1,
                                               const GeneratorConfig& cfg);

/// pos2[i] = pos1[i] + flow(pos1[i]).
void advect(ParticleSet& set, const FlowField& field);

/// Independent per-frame hiding; inactive particles are invisible in both frames.
void apply_hiding(const RngKey& frame1_key, const RngKey& frame2_key, ParticleSet& set, double p_hide);

/// Largest particle diameter over both frames, used to size the kernel patch.
double max_effective_diameter(const ParticleSet& set, const PairParams& params,
                              const GeneratorConfig& cfg);

/// Sample, perturb, advect and hide: everything the renderer needs for one pair.
SampledParticles make_pair_particles(const PairKeys& keys, const GeneratorConfig& cfg,
                                     const FlowField& field);

}  // namespace splatpiv
