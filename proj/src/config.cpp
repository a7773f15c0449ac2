#include "splatpiv/config.hpp"

#include "splatpiv/error.hpp"
#include "splatpiv/rng.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace splatpiv {

namespace {

std::size_t line_of(const YAML::Node& node) {
    const auto mark = node.Mark();
    return mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0;
}

[[noreturn]] void type_mismatch(const YAML::Node& node, const std::string& path,
                                const std::string& expected) {
    throw ConfigError(path, "expected " + expected, line_of(node));
}

long long get_integer(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) type_mismatch(node, path, "an integer");
    try {
        return node.as<long long>();
    } catch (const YAML::Exception&) {
        type_mismatch(node, path, "an integer");
    }
}

int get_int(const YAML::Node& node, const std::string& path) {
    const long long v = get_integer(node, path);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError(path, "integer out of range", line_of(node));
    }
    return static_cast<int>(v);
}

std::uint64_t get_uint64(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) type_mismatch(node, path, "an unsigned 64-bit integer");
    const std::string& text = node.Scalar();
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) type_mismatch(node, path, "an unsigned 64-bit integer");
    return value;
}

double get_double(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) type_mismatch(node, path, "a number");
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        type_mismatch(node, path, "a number");
    }
}

bool get_bool(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) type_mismatch(node, path, "a boolean");
    try {
        return node.as<bool>();
    } catch (const YAML::Exception&) {
        type_mismatch(node, path, "a boolean");
    }
}

std::string get_string(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) type_mismatch(node, path, "a string");
    return node.Scalar();
}

std::vector<double> get_double_list(const YAML::Node& node, const std::string& path) {
    if (node.IsNull()) return {};
    if (!node.IsSequence()) type_mismatch(node, path, "a list of numbers");
    std::vector<double> out;
    out.reserve(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
        out.push_back(get_double(node[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

Range get_range(const YAML::Node& node, const std::string& path) {
    if (!node.IsSequence() || node.size() != 2) type_mismatch(node, path, "a [min, max] pair");
    return {get_double(node[0], path + "[0]"), get_double(node[1], path + "[1]")};
}

/// Iterate a mapping, rejecting duplicate keys and non-scalar keys.
template <typename Fn>
void for_each_entry(const YAML::Node& map, const std::string& prefix, Fn&& fn) {
    if (!map.IsMap()) type_mismatch(map, prefix.empty() ? "<document>" : prefix, "a mapping");
    std::set<std::string> seen;
    for (const auto& entry : map) {
        if (!entry.first.IsScalar()) type_mismatch(entry.first, prefix, "scalar keys");
        const std::string key = entry.first.Scalar();
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!seen.insert(key).second) {
            throw ConfigError(path, "duplicate key", line_of(entry.first));
        }
        fn(key, path, entry.first, entry.second);
    }
}

[[noreturn]] void unknown_key(const YAML::Node& key_node, const std::string& path) {
    throw ConfigError(path, "unknown key", line_of(key_node));
}

FlowFormat parse_flow_format(const YAML::Node& node, const std::string& path) {
    const std::string tag = get_string(node, path);
    if (tag == "flo") return FlowFormat::flo;
    if (tag == "npy") return FlowFormat::npy;
    if (tag == "hdf5" || tag == "h5") return FlowFormat::hdf5;
    if (tag == "function") return FlowFormat::function;
    throw ConfigError(path, "unknown flow format '" + tag + "' (flo, npy, hdf5, function)",
                      line_of(node));
}

FlowFormat infer_format(const std::string& path_text) {
    const auto ext = std::filesystem::path(path_text).extension().string();
    if (ext == ".npy") return FlowFormat::npy;
    if (ext == ".h5" || ext == ".hdf5") return FlowFormat::hdf5;
    return FlowFormat::flo;
}

FlowSource parse_source(const YAML::Node& node, const std::string& prefix) {
    FlowSource src;
    bool has_format = false;
    for_each_entry(node, prefix, [&](const std::string& key, const std::string& path,
                                     const YAML::Node& key_node, const YAML::Node& value) {
        if (key == "path") {
            src.path = get_string(value, path);
        } else if (key == "function") {
            src.function = get_string(value, path);
        } else if (key == "format") {
            src.format = parse_flow_format(value, path);
            has_format = true;
        } else if (key == "params") {
            src.params = get_double_list(value, path);
        } else if (key == "u_dataset") {
            src.u_dataset = get_string(value, path);
        } else if (key == "v_dataset") {
            src.v_dataset = get_string(value, path);
        } else if (key == "scale") {
            src.scale = get_double(value, path);
        } else {
            unknown_key(key_node, path);
        }
    });
    if (!has_format) {
        if (!src.function.empty()) {
            src.format = FlowFormat::function;
        } else if (!src.path.empty()) {
            src.format = infer_format(src.path);
        } else {
            throw ConfigError(prefix, "needs a 'path' or a 'function'", line_of(node));
        }
    }
    return src;
}

void check(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

void check_range(const Range& r, const char* field) {
    check(std::isfinite(r.min) && std::isfinite(r.max), field, "bounds must be finite");
    check(r.min <= r.max, field, "min must not exceed max");
}

void check_std(double v, const char* field) {
    check(std::isfinite(v) && v >= 0.0, field, "must be a finite non-negative number");
}

//---------------------------------------------------------------------------//
// Rendering
//---------------------------------------------------------------------------//

std::string fmt_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string out(buf, ptr);
    // Keep integral values typed as floats for the reader's benefit.
    if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
    return out;
}

std::string fmt_range(const Range& r) {
    return "[" + fmt_double(r.min) + ", " + fmt_double(r.max) + "]";
}

std::string fmt_list(const std::vector<double>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += fmt_double(values[i]);
    }
    return out + "]";
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\x%02x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    return out + "\"";
}

}  // namespace

//---------------------------------------------------------------------------//

std::size_t particles_for_density(double ppp, int height, int width, bool round_up) {
    const double exact = ppp * static_cast<double>(height) * static_cast<double>(width);
    if (round_up) {
        // Absorb representation error such as 0.1 * 100 * 100 = 1000.0000000000001.
        return static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
    }
    return static_cast<std::size_t>(std::llround(exact));
}

std::size_t GeneratorConfig::particle_count() const {
    return particles_for_density(seeding_density_range.max, image_height, image_width, true);
}

int GeneratorConfig::resolved_threads() const {
    if (threads > 0) return threads;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int GeneratorConfig::resolved_prefetch_capacity() const {
    return prefetch_capacity > 0 ? prefetch_capacity : 2 * flow_fields_per_batch;
}

void validate(const GeneratorConfig& c) {
    check(c.image_height > 0, "image_height", "must be positive");
    check(c.image_width > 0, "image_width", "must be positive");
    check(c.batch_size > 0, "batch_size", "must be positive");
    check(c.flow_fields_per_batch > 0, "flow_fields_per_batch", "must be positive");
    check(c.batches_per_flow_field > 0, "batches_per_flow_field", "must be positive");
    check(c.batch_size % c.flow_fields_per_batch == 0, "flow_fields_per_batch",
          "must divide batch_size (" + std::to_string(c.flow_fields_per_batch) + " does not divide " +
              std::to_string(c.batch_size) + ")");

    check_range(c.seeding_density_range, "seeding_density_range");
    check(c.seeding_density_range.min > 0.0, "seeding_density_range", "must be positive");
    const double max_particles = c.seeding_density_range.max * c.image_height * c.image_width;
    check(max_particles >= 1.0 - 1e-9, "seeding_density_range",
          "ppp_max * height * width must be at least 1");
    check(max_particles < 1e9, "seeding_density_range", "implies more than 1e9 particles");

    check_range(c.diameter_range, "diameter_range");
    check(c.diameter_range.min > 0.0, "diameter_range", "must be positive");
    check(std::isfinite(c.diameter_sigma_ratio) && c.diameter_sigma_ratio > 0.0,
          "diameter_sigma_ratio", "must be positive");

    check_range(c.peak_intensity_range, "peak_intensity_range");
    check(c.peak_intensity_range.min >= 0.0 && c.peak_intensity_range.max <= 1.0,
          "peak_intensity_range", "must lie in [0, 1]");
    check_range(c.rho_range, "rho_range");
    check(c.rho_range.min > -1.0 && c.rho_range.max < 1.0, "rho_range",
          "must lie strictly inside (-1, 1)");

    check_std(c.frame2_sigma_std, "frame2_sigma_std");
    check_std(c.frame2_rho_std, "frame2_rho_std");
    check_std(c.frame2_intensity_std, "frame2_intensity_std");
    check(c.hide_probability >= 0.0 && c.hide_probability < 1.0, "hide_probability",
          "must lie in [0, 1)");

    check(c.noise.background_offset >= 0.0 && c.noise.background_offset < 1.0,
          "noise.background_offset", "must lie in [0, 1)");
    check_std(c.noise.gaussian_std, "noise.gaussian_std");

    if (!c.target_histogram.empty()) {
        check(c.target_histogram.size() == 256, "target_histogram", "must have exactly 256 bins");
        double sum = 0.0;
        for (double w : c.target_histogram) {
            check(std::isfinite(w) && w >= 0.0, "target_histogram", "bins must be non-negative");
            sum += w;
        }
        check(sum > 0.0, "target_histogram", "must have a positive sum");
    }

    for (const auto& src : c.flow_sources) {
        check(std::isfinite(src.scale), "flow_sources.scale", "must be finite");
        if (src.format == FlowFormat::function) {
            check(!src.function.empty(), "flow_sources.function", "function sources need a name");
        } else {
            check(!src.path.empty(), "flow_sources.path", "file sources need a path");
        }
        if (src.format == FlowFormat::hdf5) {
            check(!src.u_dataset.empty() && !src.v_dataset.empty(), "flow_sources.u_dataset",
                  "dataset names must be non-empty");
        }
    }

    check(c.threads >= 0, "threads", "must be 0 (auto) or positive");
    check(!c.output.directory.empty(), "output.directory", "must be non-empty");
    check(std::isfinite(c.patch_scale) && c.patch_scale > 0.0, "patch_scale", "must be positive");
    check(c.prefetch_capacity >= 0, "prefetch_capacity", "must be 0 (auto) or positive");
    check(c.prefetch_capacity == 0 || c.prefetch_capacity >= c.flow_fields_per_batch,
          "prefetch_capacity", "must be at least flow_fields_per_batch");
    check(c.device == "cpu", "device", "only 'cpu' is supported, got '" + c.device + "'");
}

GeneratorConfig default_config() {
    GeneratorConfig cfg;
    FlowSource still;
    still.format = FlowFormat::function;
    still.function = "constant";
    still.params = {0.0, 0.0};
    cfg.flow_sources.push_back(std::move(still));
    return cfg;
}

GeneratorConfig parse_config(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", "syntax error: " + e.msg,
                          e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0);
    }

    GeneratorConfig cfg = default_config();
    if (root.IsNull()) {
        validate(cfg);
        return cfg;
    }

    for_each_entry(root, "", [&](const std::string& key, const std::string& path,
                                 const YAML::Node& key_node, const YAML::Node& value) {
        if (key == "image_height") {
            cfg.image_height = get_int(value, path);
        } else if (key == "image_width") {
            cfg.image_width = get_int(value, path);
        } else if (key == "batch_size") {
            cfg.batch_size = get_int(value, path);
        } else if (key == "flow_fields_per_batch") {
            cfg.flow_fields_per_batch = get_int(value, path);
        } else if (key == "batches_per_flow_field") {
            cfg.batches_per_flow_field = get_int(value, path);
        } else if (key == "seeding_density_range") {
            cfg.seeding_density_range = get_range(value, path);
        } else if (key == "diameter_range") {
            cfg.diameter_range = get_range(value, path);
        } else if (key == "diameter_sigma_ratio") {
            cfg.diameter_sigma_ratio = get_double(value, path);
        } else if (key == "independent_axes") {
            cfg.independent_axes = get_bool(value, path);
        } else if (key == "peak_intensity_range") {
            cfg.peak_intensity_range = get_range(value, path);
        } else if (key == "rho_range") {
            cfg.rho_range = get_range(value, path);
        } else if (key == "frame2_sigma_std") {
            cfg.frame2_sigma_std = get_double(value, path);
        } else if (key == "frame2_rho_std") {
            cfg.frame2_rho_std = get_double(value, path);
        } else if (key == "frame2_intensity_std") {
            cfg.frame2_intensity_std = get_double(value, path);
        } else if (key == "hide_probability") {
            cfg.hide_probability = get_double(value, path);
        } else if (key == "noise") {
            for_each_entry(value, path, [&](const std::string& k, const std::string& p,
                                            const YAML::Node& kn, const YAML::Node& v) {
                if (k == "background_offset") {
                    cfg.noise.background_offset = get_double(v, p);
                } else if (k == "gaussian_std") {
                    cfg.noise.gaussian_std = get_double(v, p);
                } else {
                    unknown_key(kn, p);
                }
            });
        } else if (key == "target_histogram") {
            cfg.target_histogram = get_double_list(value, path);
        } else if (key == "flow_sources") {
            if (!value.IsSequence()) type_mismatch(value, path, "a list of sources");
            cfg.flow_sources.clear();
            for (std::size_t i = 0; i < value.size(); ++i) {
                cfg.flow_sources.push_back(
                    parse_source(value[i], path + "[" + std::to_string(i) + "]"));
            }
        } else if (key == "seed") {
            cfg.seed = get_uint64(value, path);
        } else if (key == "threads") {
            cfg.threads = get_int(value, path);
        } else if (key == "output") {
            for_each_entry(value, path, [&](const std::string& k, const std::string& p,
                                            const YAML::Node& kn, const YAML::Node& v) {
                if (k == "format") {
                    const std::string tag = get_string(v, p);
                    if (tag == "png16") {
                        cfg.output.format = OutputFormat::png16;
                    } else if (tag == "raw_f32") {
                        cfg.output.format = OutputFormat::raw_f32;
                    } else {
                        throw ConfigError(p, "unknown output format '" + tag + "' (png16, raw_f32)",
                                          line_of(v));
                    }
                } else if (k == "directory") {
                    cfg.output.directory = get_string(v, p);
                } else {
                    unknown_key(kn, p);
                }
            });
        } else if (key == "patch_scale") {
            cfg.patch_scale = get_double(value, path);
        } else if (key == "prefetch_capacity") {
            cfg.prefetch_capacity = get_int(value, path);
        } else if (key == "cycle_sources") {
            cfg.cycle_sources = get_bool(value, path);
        } else if (key == "max_batches") {
            cfg.max_batches = get_uint64(value, path);
        } else if (key == "device") {
            cfg.device = get_string(value, path);
        } else {
            unknown_key(key_node, path);
        }
    });

    validate(cfg);
    return cfg;
}

GeneratorConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string_view to_string(FlowFormat format) {
    switch (format) {
        case FlowFormat::flo: return "flo";
        case FlowFormat::npy: return "npy";
        case FlowFormat::hdf5: return "hdf5";
        case FlowFormat::function: return "function";
    }
    return "?";
}

std::string_view to_string(OutputFormat format) {
    return format == OutputFormat::png16 ? "png16" : "raw_f32";
}

std::string render_config(const GeneratorConfig& c) {
    std::ostringstream out;
    out << "image_height: " << c.image_height << "\n"
        << "image_width: " << c.image_width << "\n"
        << "batch_size: " << c.batch_size << "\n"
        << "flow_fields_per_batch: " << c.flow_fields_per_batch << "\n"
        << "batches_per_flow_field: " << c.batches_per_flow_field << "\n"
        << "seeding_density_range: " << fmt_range(c.seeding_density_range) << "\n"
        << "diameter_range: " << fmt_range(c.diameter_range) << "\n"
        << "diameter_sigma_ratio: " << fmt_double(c.diameter_sigma_ratio) << "\n"
        << "independent_axes: " << (c.independent_axes ? "true" : "false") << "\n"
        << "peak_intensity_range: " << fmt_range(c.peak_intensity_range) << "\n"
        << "rho_range: " << fmt_range(c.rho_range) << "\n"
        << "frame2_sigma_std: " << fmt_double(c.frame2_sigma_std) << "\n"
        << "frame2_rho_std: " << fmt_double(c.frame2_rho_std) << "\n"
        << "frame2_intensity_std: " << fmt_double(c.frame2_intensity_std) << "\n"
        << "hide_probability: " << fmt_double(c.hide_probability) << "\n"
        << "noise:\n"
        << "  background_offset: " << fmt_double(c.noise.background_offset) << "\n"
        << "  gaussian_std: " << fmt_double(c.noise.gaussian_std) << "\n"
        << "target_histogram: " << fmt_list(c.target_histogram) << "\n";
    if (c.flow_sources.empty()) {
        out << "flow_sources: []\n";
    } else {
        out << "flow_sources:\n";
        for (const auto& s : c.flow_sources) {
            out << "  - format: " << to_string(s.format) << "\n";
            if (!s.path.empty()) out << "    path: " << quote(s.path) << "\n";
            if (!s.function.empty()) out << "    function: " << quote(s.function) << "\n";
            out << "    params: " << fmt_list(s.params) << "\n"
                << "    u_dataset: " << quote(s.u_dataset) << "\n"
                << "    v_dataset: " << quote(s.v_dataset) << "\n"
                << "    scale: " << fmt_double(s.scale) << "\n";
        }
    }
    out << "seed: " << c.seed << "\n"
        << "threads: " << c.threads << "\n"
        << "output:\n"
        << "  format: " << to_string(c.output.format) << "\n"
        << "  directory: " << quote(c.output.directory) << "\n"
        << "patch_scale: " << fmt_double(c.patch_scale) << "\n"
        << "prefetch_capacity: " << c.prefetch_capacity << "\n"
        << "cycle_sources: " << (c.cycle_sources ? "true" : "false") << "\n"
        << "max_batches: " << c.max_batches << "\n"
        << "device: " << quote(c.device) << "\n";
    return out.str();
}

std::uint64_t fingerprint(const GeneratorConfig& cfg) {
    const std::string text = render_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h = (h ^ ch) * 0x100000001b3ull;
    }
    return detail::mix64(h);
}

}  // namespace splatpiv
