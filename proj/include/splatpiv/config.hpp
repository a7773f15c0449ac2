#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace splatpiv {

/// Closed interval [min, max].
struct Range {
    double min = 0.0;
    double max = 0.0;

    friend bool operator==(const Range&, const Range&) = default;
};

enum class FlowFormat { flo, npy, hdf5, function };

/// One entry of the flow-field source rotation.
struct FlowSource {
    FlowFormat format = FlowFormat::flo;
    std::string path;              // file sources
    std::string function;          // function sources: registered name
    std::vector<double> params;    // function sources: arguments
    std::string u_dataset = "u";   // hdf5 only
    std::string v_dataset = "v";   // hdf5 only
    double scale = 1.0;            // multiplies both displacement components

    friend bool operator==(const FlowSource&, const FlowSource&) = default;
};

struct NoiseConfig {
    double background_offset = 0.0;
    double gaussian_std = 0.0;

    bool enabled() const noexcept { return background_offset != 0.0 || gaussian_std != 0.0; }

    friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

enum class OutputFormat { png16, raw_f32 };

struct OutputConfig {
    OutputFormat format = OutputFormat::png16;
    std::string directory = "out";

    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

/**
 * Complete, validated generation recipe.
 *
 * Defaults reproduce the reference operating point: 512x512 images,
 * batch of 64, one flow field per batch, seeding density 0.06 ppp and
 * particle diameters in [0.8, 1.2] px. Everything else defaults to a
 * neutral value (no noise, no hiding, no histogram adjustment).
 */
struct GeneratorConfig {
    int image_height = 512;
    int image_width = 512;
    int batch_size = 64;
    int flow_fields_per_batch = 1;
    int batches_per_flow_field = 1;

    Range seeding_density_range{0.06, 0.06};
    Range diameter_range{0.8, 1.2};
    /// sigma = diameter / ratio (4 is the e^-2 diameter convention).
    double diameter_sigma_ratio = 4.0;
    /// Draw separate x/y diameters instead of one isotropic diameter.
    bool independent_axes = false;
    Range peak_intensity_range{1.0, 1.0};
    Range rho_range{0.0, 0.0};

    double frame2_sigma_std = 0.0;
    double frame2_rho_std = 0.0;
    double frame2_intensity_std = 0.0;
    double hide_probability = 0.0;

    NoiseConfig noise;
    /// Empty, or 256 non-negative bin weights with a positive sum.
    std::vector<double> target_histogram;

    std::vector<FlowSource> flow_sources;
    std::uint64_t seed = 0;
    /// 0 selects std::thread::hardware_concurrency().
    int threads = 0;
    OutputConfig output;

    /// Patch side = smallest odd integer >= patch_scale * max(d) + 1.
    double patch_scale = 3.0;
    /// 0 selects 2 * flow_fields_per_batch.
    int prefetch_capacity = 0;
    bool cycle_sources = true;
    /// 0 means unbounded.
    std::uint64_t max_batches = 0;
    std::string device = "cpu";

    /// Allocated particles per pair: ceil(ppp_max * H * W).
    std::size_t particle_count() const;
    /// Pairs rendered from each flow field of a batch (B / F).
    int pairs_per_field() const { return batch_size / flow_fields_per_batch; }
    int resolved_threads() const;
    int resolved_prefetch_capacity() const;

    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Count of particles for a density over an image, tolerant to float noise in the product.
std::size_t particles_for_density(double ppp, int height, int width, bool round_up);

/// Parse a YAML document. Throws ConfigError on any syntax, key, type or invariant problem.
GeneratorConfig parse_config(std::string_view text);
GeneratorConfig load_config(const std::filesystem::path& path);
GeneratorConfig default_config();

/// Throws ConfigError naming the first violated field constraint.
void validate(const GeneratorConfig& cfg);

/// Serialize to a document that parse_config maps back to an equal config.
std::string render_config(const GeneratorConfig& cfg);

/// Stable 64-bit hash of the rendered config.
std::uint64_t fingerprint(const GeneratorConfig& cfg);

std::string_view to_string(FlowFormat format);
std::string_view to_string(OutputFormat format);

}  // namespace splatpiv
