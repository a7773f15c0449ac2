#include "splatpiv/particles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splatpiv {

namespace {

constexpr std::uint64_t kAppearanceDraws = 4;  // intensity, diameter, rho, second diameter
constexpr std::uint64_t kPairLane = 1;

struct RangeTracker {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Range range() const { return lo <= hi ? Range{lo, hi} : Range{0.0, 0.0}; }
};

}  // namespace

SampledParticles sample_particles(const PairKeys& keys, const GeneratorConfig& cfg) {
    const std::size_t n = cfg.particle_count();
    const double width = cfg.image_width;
    const double height = cfg.image_height;

    SampledParticles out;
    PairParams& params = out.params;
    params.particle_count = n;
    params.seeding_density = keys.appearance(kPairLane).uniform(0, cfg.seeding_density_range.min,
                                                                cfg.seeding_density_range.max);
    params.active_count = std::min(
        n, particles_for_density(params.seeding_density, cfg.image_height, cfg.image_width, false));

    ParticleSet& set = out.set;
    set.pos1.resize(n);
    set.app1.resize(n);
    set.active.assign(n, 0);
    set.visible1.assign(n, 1);
    set.visible2.assign(n, 1);
    params.diameters.resize(n);

    const RngKey pos_key = keys.position();
    const RngKey app_key = keys.appearance();
    const auto& d = cfg.diameter_range;
    RangeTracker intensity, diameter, rho;

    for (std::size_t i = 0; i < n; ++i) {
        set.pos1[i] = {width * pos_key.uniform(2 * i), height * pos_key.uniform(2 * i + 1)};

        const std::uint64_t base = kAppearanceDraws * i;
        const double dx = app_key.uniform(base + 1, d.min, d.max);
        const double dy = cfg.independent_axes ? app_key.uniform(base + 3, d.min, d.max) : dx;
        params.diameters[i] = static_cast<float>(std::max(dx, dy));
        params.max_diameter = std::max(params.max_diameter, std::max(dx, dy));

        ParticleAppearance& a = set.app1[i];
        a.sigma_x = dx / cfg.diameter_sigma_ratio;
        a.sigma_y = dy / cfg.diameter_sigma_ratio;
        a.rho = app_key.uniform(base + 2, cfg.rho_range.min, cfg.rho_range.max);

        // The first M particles in sampling order form the realized density.
        if (i < params.active_count) {
            set.active[i] = 1;
            a.intensity = app_key.uniform(base, cfg.peak_intensity_range.min, cfg.peak_intensity_range.max);
            intensity.add(a.intensity);
            diameter.add(std::max(dx, dy));
            rho.add(a.rho);
        } else {
            a.intensity = 0.0;
        }
    }

    params.intensity_realized = intensity.range();
    params.diameter_realized = diameter.range();
    params.rho_realized = rho.range();

    set.pos2 = set.pos1;
    set.app2 = set.app1;
    return out;
}

std::vector<ParticleAppearance> perturb_frame2(const RngKey& key, std::span<const ParticleAppearance> app1,
                                               const GeneratorConfig& cfg) {
    std::vector<ParticleAppearance> app2(app1.begin(), app1.end());
    const double s_sigma = cfg.frame2_sigma_std;
    const double s_intensity = cfg.frame2_intensity_std;
    const double s_rho = cfg.frame2_rho_std;
    if (s_sigma == 0.0 && s_intensity == 0.0 && s_rho == 0.0) return app2;

    for (std::size_t i = 0; i < app2.size(); ++i) {
        ParticleAppearance& a = app2[i];
        const std::uint64_t base = 4 * i;
        if (s_sigma > 0.0) {
            a.sigma_x = std::max(kMinSigma, a.sigma_x + s_sigma * key.normal(base));
            a.sigma_y = std::max(kMinSigma, a.sigma_y + s_sigma * key.normal(base + 1));
        }
        if (a.intensity > 0.0 && s_intensity > 0.0) {
            a.intensity = std::clamp(a.intensity + s_intensity * key.normal(base + 2), 0.0, 1.0);
        }
        if (s_rho > 0.0) {
            a.rho = std::clamp(a.rho + s_rho * key.normal(base + 3), -1.0 + kRhoMargin, 1.0 - kRhoMargin);
        }
    }
    return app2;
}

void advect(ParticleSet& set, const FlowField& field) {
    set.pos2.resize(set.pos1.size());
    for (std::size_t i = 0; i < set.pos1.size(); ++i) {
        const Vec2 d = sample_flow(field, set.pos1[i]);
        set.pos2[i] = {set.pos1[i].x + d.x, set.pos1[i].y + d.y};
    }
}

void apply_hiding(const RngKey& frame1_key, const RngKey& frame2_key, ParticleSet& set, double p_hide) {
    const std::size_t n = set.count();
    set.visible1.resize(n);
    set.visible2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!set.active[i]) {
            set.visible1[i] = set.visible2[i] = 0;
            continue;
        }
        set.visible1[i] = p_hide == 0.0 || frame1_key.uniform(i) >= p_hide;
        set.visible2[i] = p_hide == 0.0 || frame2_key.uniform(i) >= p_hide;
    }
}

double max_effective_diameter(const ParticleSet& set, const PairParams& params,
                              const GeneratorConfig& cfg) {
    double widest = params.max_diameter;
    if (cfg.frame2_sigma_std > 0.0) {
        for (const auto& a : set.app2) {
            widest = std::max(widest, std::max(a.sigma_x, a.sigma_y) * cfg.diameter_sigma_ratio);
        }
    }
    return widest;
}

SampledParticles make_pair_particles(const PairKeys& keys, const GeneratorConfig& cfg,
                                     const FlowField& field) {
    SampledParticles out = sample_particles(keys, cfg);
    out.set.app2 = perturb_frame2(keys.perturb(), out.set.app1, cfg);
    advect(out.set, field);
    apply_hiding(keys.hide(1), keys.hide(2), out.set, cfg.hide_probability);
    return out;
}

}  // namespace splatpiv
