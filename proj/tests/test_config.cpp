#include "splatpiv/config.hpp"
#include "splatpiv/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace splatpiv;

namespace {

ConfigError config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("document was accepted: " << text);
    return ConfigError("", "");
}

GeneratorConfig random_config(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
    auto range = [&](double lo, double hi) {
        double a = lo + (hi - lo) * unit(gen);
        double b = lo + (hi - lo) * unit(gen);
        if (a > b) std::swap(a, b);
        return Range{a, b};
    };

    GeneratorConfig c;
    c.image_height = pick(8, 2048);
    c.image_width = pick(8, 2048);
    c.flow_fields_per_batch = pick(1, 8);
    c.batch_size = c.flow_fields_per_batch * pick(1, 16);
    c.batches_per_flow_field = pick(1, 5);
    c.seeding_density_range = range(0.01, 0.2);
    c.diameter_range = range(0.3, 5.0);
    c.diameter_sigma_ratio = 1.0 + 7.0 * unit(gen);
    c.independent_axes = unit(gen) < 0.5;
    c.peak_intensity_range = range(0.0, 1.0);
    c.rho_range = range(-0.99, 0.99);
    c.frame2_sigma_std = 0.3 * unit(gen);
    c.frame2_rho_std = 0.1 * unit(gen);
    c.frame2_intensity_std = 0.2 * unit(gen);
    c.hide_probability = 0.9 * unit(gen);
    c.noise = {0.5 * unit(gen), 0.1 * unit(gen)};
    if (unit(gen) < 0.3) {
        c.target_histogram.resize(256);
        for (double& w : c.target_histogram) w = unit(gen) * 100.0;
    }
    const int sources = pick(1, 4);
    for (int s = 0; s < sources; ++s) {
        FlowSource src;
        switch (pick(0, 3)) {
            case 0: src.format = FlowFormat::flo; src.path = "fields/a b/" + std::to_string(s) + ".flo"; break;
            case 1: src.format = FlowFormat::npy; src.path = "x\"quoted\".npy"; break;
            case 2:
                src.format = FlowFormat::hdf5;
                src.path = "jhtdb.h5";
                src.u_dataset = "vel/u";
                src.v_dataset = "vel/v";
                break;
            default:
                src.format = FlowFormat::function;
                src.function = "rotation";
                src.params = {unit(gen) * 0.01};
        }
        src.scale = 0.1 + 3.0 * unit(gen);
        c.flow_sources.push_back(src);
    }
    c.seed = gen();
    c.threads = pick(0, 64);
    c.output = {unit(gen) < 0.5 ? OutputFormat::png16 : OutputFormat::raw_f32, "out dir/" + std::to_string(pick(0, 99))};
    c.patch_scale = 1.0 + 4.0 * unit(gen);
    c.prefetch_capacity = unit(gen) < 0.5 ? 0 : c.flow_fields_per_batch + pick(0, 4);
    c.cycle_sources = unit(gen) < 0.5;
    c.max_batches = static_cast<std::uint64_t>(pick(0, 1000));
    return c;
}

}  // namespace

TEST_CASE("baseline document matches the reference operating point") {
    const auto cfg = parse_config(R"(
image_height: 512
image_width: 512
batch_size: 64
seeding_density_range: [0.06, 0.06]
diameter_range: [0.8, 1.2]
flow_fields_per_batch: 1
)");
    CHECK(cfg.image_height == 512);
    CHECK(cfg.image_width == 512);
    CHECK(cfg.batch_size == 64);
    CHECK(cfg.flow_fields_per_batch == 1);
    CHECK(cfg.seeding_density_range == Range{0.06, 0.06});
    CHECK(cfg.diameter_range == Range{0.8, 1.2});
    CHECK(cfg == default_config());
}

TEST_CASE("256 pairs over 64 fields gives 4 pairs per field") {
    const auto cfg = parse_config("batch_size: 256\nflow_fields_per_batch: 64\n");
    CHECK(cfg.pairs_per_field() == 4);
}

TEST_CASE("flow field count must divide the batch size") {
    const auto e = config_error("batch_size: 10\nflow_fields_per_batch: 3\n");
    CHECK(e.field() == "flow_fields_per_batch");
}

TEST_CASE("default config") {
    const auto cfg = default_config();
    CHECK(cfg.image_height == 512);
    CHECK(cfg.image_width == 512);
    CHECK(cfg.batch_size == 64);
    CHECK(cfg.flow_fields_per_batch == 1);
    CHECK(cfg.seeding_density_range == Range{0.06, 0.06});
    CHECK(cfg.diameter_range == Range{0.8, 1.2});
    CHECK(cfg.seed == 0);
    CHECK(cfg.threads == 0);
    CHECK(cfg.noise.enabled() == false);
    CHECK(cfg.target_histogram.empty());
    CHECK(cfg.hide_probability == 0.0);
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("particle count from the maximum density") {
    auto cfg = default_config();
    CHECK(cfg.particle_count() == 15729);
    cfg.image_height = cfg.image_width = 100;
    cfg.seeding_density_range = {0.1, 0.1};
    CHECK(cfg.particle_count() == 1000);
    CHECK(particles_for_density(0.06, 512, 512, false) == 15729);
    CHECK(particles_for_density(0.0, 512, 512, false) == 0);
}

TEST_CASE("render and parse round-trip") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 300; ++trial) {
        const GeneratorConfig cfg = random_config(gen);
        REQUIRE_NOTHROW(validate(cfg));
        const std::string text = render_config(cfg);
        const GeneratorConfig back = parse_config(text);
        CHECK_MESSAGE(back == cfg, text);
        CHECK(render_config(back) == text);
        CHECK(fingerprint(back) == fingerprint(cfg));
    }
}

TEST_CASE("fingerprint changes with any field") {
    const auto base = default_config();
    auto other = base;
    other.seed = 1;
    CHECK(fingerprint(base) != fingerprint(other));
    other = base;
    other.noise.gaussian_std = 1e-9;
    CHECK(fingerprint(base) != fingerprint(other));
}

TEST_CASE("errors carry a line number and field") {
    SUBCASE("syntax") {
        const auto e = config_error("image_height: 64\nbatch_size: [1, 2\n");
        CHECK(e.line() >= 2);
    }
    SUBCASE("unknown key") {
        const auto e = config_error("image_height: 64\nimage_hieght: 64\n");
        CHECK(e.field() == "image_hieght");
        CHECK(e.line() == 2);
    }
    SUBCASE("type mismatch") {
        const auto e = config_error("batch_size: many\n");
        CHECK(e.field() == "batch_size");
        CHECK(e.line() == 1);
    }
    SUBCASE("duplicate key") {
        const auto e = config_error("seed: 1\nseed: 2\n");
        CHECK(e.field() == "seed");
        CHECK(e.line() == 2);
    }
    SUBCASE("nested unknown key") {
        const auto e = config_error("noise:\n  background_offset: 0.1\n  shot: 3\n");
        CHECK(e.field() == "noise.shot");
        CHECK(e.line() == 3);
    }
    SUBCASE("bad source entry") {
        const auto e = config_error("flow_sources:\n  - path: a.flo\n    colour: red\n");
        CHECK(e.line() == 3);
    }
}

TEST_CASE("invariant violations name the field") {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"image_height: 0", "image_height"},
        {"image_width: -3", "image_width"},
        {"batch_size: 0", "batch_size"},
        {"batches_per_flow_field: 0", "batches_per_flow_field"},
        {"seeding_density_range: [0.1, 0.05]", "seeding_density_range"},
        {"seeding_density_range: [0.0, 0.05]", "seeding_density_range"},
        {"image_height: 2\nimage_width: 2\nseeding_density_range: [0.1, 0.1]", "seeding_density_range"},
        {"diameter_range: [2, 1]", "diameter_range"},
        {"diameter_range: [0, 1]", "diameter_range"},
        {"peak_intensity_range: [0.5, 1.5]", "peak_intensity_range"},
        {"rho_range: [-1, 0]", "rho_range"},
        {"rho_range: [0, 1]", "rho_range"},
        {"frame2_sigma_std: -0.1", "frame2_sigma_std"},
        {"frame2_rho_std: -1", "frame2_rho_std"},
        {"frame2_intensity_std: -1", "frame2_intensity_std"},
        {"hide_probability: 1.0", "hide_probability"},
        {"hide_probability: -0.1", "hide_probability"},
        {"noise: {background_offset: 1.0}", "noise.background_offset"},
        {"noise: {gaussian_std: -1}", "noise.gaussian_std"},
        {"target_histogram: [1, 2, 3]", "target_histogram"},
        {"threads: -1", "threads"},
        {"device: cuda", "device"},
        {"flow_fields_per_batch: 4\nbatch_size: 8\nprefetch_capacity: 2", "prefetch_capacity"},
        {"output: {format: jpeg}", "output.format"},
    };
    for (const auto& [text, field] : cases) {
        CAPTURE(text);
        const auto e = config_error(text + "\n");
        CHECK(e.field() == field);
    }
}

TEST_CASE("histogram needs 256 bins and a positive sum") {
    std::string zeros = "target_histogram: [";
    for (int i = 0; i < 256; ++i) zeros += (i ? ", 0" : "0");
    zeros += "]\n";
    CHECK(config_error(zeros).field() == "target_histogram");

    std::string ok = "target_histogram: [";
    for (int i = 0; i < 256; ++i) ok += (i ? ", 1" : "1");
    ok += "]\n";
    CHECK(parse_config(ok).target_histogram.size() == 256);
}

TEST_CASE("flow source format inference") {
    const auto cfg = parse_config(R"(
flow_sources:
  - path: a.flo
  - path: b.npy
  - path: c.h5
    u_dataset: ux
    v_dataset: uy
  - path: d.hdf5
  - function: rotation
    params: [0.01]
    scale: 2
)");
    REQUIRE(cfg.flow_sources.size() == 5);
    CHECK(cfg.flow_sources[0].format == FlowFormat::flo);
    CHECK(cfg.flow_sources[1].format == FlowFormat::npy);
    CHECK(cfg.flow_sources[2].format == FlowFormat::hdf5);
    CHECK(cfg.flow_sources[2].u_dataset == "ux");
    CHECK(cfg.flow_sources[3].format == FlowFormat::hdf5);
    CHECK(cfg.flow_sources[4].format == FlowFormat::function);
    CHECK(cfg.flow_sources[4].scale == 2.0);
}

TEST_CASE("seed accepts the full unsigned range") {
    CHECK(parse_config("seed: 18446744073709551615\n").seed == 18446744073709551615ull);
    CHECK(config_error("seed: -1\n").field() == "seed");
    CHECK(config_error("seed: 18446744073709551616\n").field() == "seed");
}

TEST_CASE("load_config reads files and reports missing ones") {
    test::TempDir dir("cfg");
    const auto path = dir / "c.yaml";
    std::ofstream(path) << "image_height: 128\n";
    CHECK(load_config(path).image_height == 128);
    CHECK_THROWS_AS(load_config(dir / "missing.yaml"), IoError);
}

TEST_CASE("mutated documents parse or fail with ConfigError") {
    const std::string base = render_config(default_config()) + "target_histogram: []\n";
    const std::string alphabet = ":-[]{},'\"#&*!|> \n\t0123456789.eE+abcxyz";
    std::mt19937_64 gen(11);
    int accepted = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        std::string doc = base;
        const int edits = 1 + int(gen() % 4);
        for (int e = 0; e < edits; ++e) {
            const std::size_t at = gen() % doc.size();
            const char ch = alphabet[gen() % alphabet.size()];
            switch (gen() % 3) {
                case 0: doc[at] = ch; break;
                case 1: doc.insert(doc.begin() + long(at), ch); break;
                default: doc.erase(at, 1 + gen() % 8);
            }
        }
        try {
            const auto cfg = parse_config(doc);
            CHECK_NOTHROW(validate(cfg));
            ++accepted;
        } catch (const ConfigError&) {
        } catch (const std::exception& e) {
            FAIL("unexpected exception " << e.what() << " for\n" << doc);
        }
    }
    MESSAGE("accepted " << accepted << " of 3000 mutated documents");
}
