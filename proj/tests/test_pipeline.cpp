#include "splatpiv/error.hpp"
#include "splatpiv/pipeline.hpp"

#include "support.hpp"

#include <doctest.h>

#include <chrono>
#include <future>
#include <map>
#include <thread>

using namespace splatpiv;
using namespace std::chrono_literals;

namespace {

std::vector<FlowSource> named_sources(std::size_t n) {
    std::vector<FlowSource> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back({FlowFormat::flo, "s" + std::to_string(k)});
    return out;
}

std::size_t source_number(const FlowSource& s) { return std::stoul(s.path.substr(1)); }

/// Every source becomes a constant field whose u value is the source number.
FlowField numbered_field(const FlowSource& s, int h, int w) {
    FlowField f(h, w);
    std::fill(f.u.begin(), f.u.end(), float(source_number(s)));
    return f;
}

GeneratorConfig tiny_config(int batch, int fields, std::size_t sources) {
    GeneratorConfig cfg = test::small_config(8, batch);
    cfg.flow_fields_per_batch = fields;
    cfg.flow_sources = named_sources(sources);
    return cfg;
}

template <typename Fn>
bool finishes_within(std::chrono::seconds limit, Fn&& fn) {
    auto done = std::async(std::launch::async, std::forward<Fn>(fn));
    return done.wait_for(limit) == std::future_status::ready;
}

bool same_batch(const ImagePairBatch& a, const ImagePairBatch& b) {
    if (a.size() != b.size() || a.batch_index != b.batch_index) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a.images1[i] == b.images1[i]) || !(a.images2[i] == b.images2[i])) return false;
        if (!(*a.flow_fields[i] == *b.flow_fields[i])) return false;
        if (a.params[i].diameters != b.params[i].diameters) return false;
        if (a.params[i].seeding_density != b.params[i].seeding_density) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("256 pairs over 64 fields: four pairs per field") {
    Sampler sampler(tiny_config(256, 64, 100), numbered_field);
    const auto batch = sampler.next_batch();
    REQUIRE(batch.size() == 256);
    for (std::size_t i = 0; i < 256; ++i) {
        CHECK(batch.flow_fields[i] == batch.flow_fields[i / 4 * 4]);
        CHECK(batch.flow_source_indices[i] == i / 4);
        CHECK(batch.images1[i].height == 8);
        CHECK(batch.images2[i].width == 8);
    }
    CHECK(batch.flow_fields[3] == batch.flow_fields[0]);
    CHECK(batch.flow_fields[4] != batch.flow_fields[3]);
    CHECK(batch.flow_fields[4]->u[0] == 1.0f);
}

TEST_CASE("reuse count holds the field window for R batches") {
    auto cfg = tiny_config(4, 2, 10);
    cfg.batches_per_flow_field = 2;
    Sampler sampler(cfg, numbered_field);
    std::vector<ImagePairBatch> batches;
    for (int b = 0; b < 5; ++b) batches.push_back(sampler.next_batch());
    CHECK(batches[0].flow_fields[0] == batches[1].flow_fields[0]);
    CHECK(batches[0].flow_fields[2] == batches[1].flow_fields[2]);
    CHECK(batches[2].flow_fields[0] != batches[1].flow_fields[0]);
    CHECK(batches[2].flow_fields[0] == batches[3].flow_fields[0]);
    CHECK(batches[4].flow_fields[0] != batches[3].flow_fields[0]);
    CHECK(batches[2].flow_source_indices == std::vector<std::size_t>{2, 2, 3, 3});
    // Same fields, different batch index: different particles.
    CHECK(!(batches[0].images1[0] == batches[1].images1[0]));
}

TEST_CASE("batch streams depend only on config and seed") {
    auto cfg = test::small_config(40, 6);
    cfg.flow_fields_per_batch = 2;
    cfg.seeding_density_range = {0.03, 0.09};
    cfg.diameter_range = {0.8, 2.5};
    cfg.rho_range = {-0.3, 0.3};
    cfg.frame2_sigma_std = 0.05;
    cfg.hide_probability = 0.1;
    cfg.noise = {0.05, 0.02};
    cfg.flow_sources = {{FlowFormat::function, "", "rotation", {0.02}}, {FlowFormat::function, "", "shear", {0.05}},
                        {FlowFormat::function, "", "constant", {1, 2}}};

    auto other = cfg;
    other.threads = 4;
    other.prefetch_capacity = 7;
    Sampler a(cfg), b(other);
    for (int k = 0; k < 3; ++k) CHECK(same_batch(a.next_batch(), b.next_batch()));

    auto reseeded = cfg;
    reseeded.seed = 1;
    Sampler c(reseeded), d(cfg);
    CHECK_FALSE(same_batch(c.next_batch(), d.next_batch()));
}

TEST_CASE("rendering a batch is a pure function of its inputs") {
    const auto cfg = test::small_config(24, 3);
    const LoadedField window[] = {{0, std::make_shared<const FlowField>(load_source(cfg.flow_sources[0], 24, 24))}};
    ThreadPool one(1), many(4);
    CHECK(same_batch(render_batch(cfg, 5, window, one), render_batch(cfg, 5, window, many)));
    CHECK_THROWS_AS(render_batch(cfg, 0, {}, one), GenerationError);
}

TEST_CASE("sampler construction fails fast") {
    auto cfg = test::small_config();
    cfg.flow_sources = {{FlowFormat::flo, "/nonexistent/field.flo"}};
    CHECK_THROWS_AS(Sampler{cfg}, IoError);
    cfg.flow_sources.clear();
    CHECK_THROWS_AS(Sampler{cfg}, ConfigError);
    cfg = test::small_config();
    cfg.batch_size = 3;
    cfg.flow_fields_per_batch = 2;
    CHECK_THROWS_AS(Sampler{cfg}, ConfigError);
}

TEST_CASE("valid .flo source gives a working sampler") {
    test::TempDir dir("flo");
    const auto field = from_function([](double x, double y) { return Vec2{0.1 * x, -0.1 * y}; }, 16, 16);
    write_file(dir / "f.flo", write_flo(field));
    auto cfg = test::small_config(16, 2);
    cfg.flow_sources = {{FlowFormat::flo, (dir / "f.flo").string()}};
    const auto sampler = make_sampler(cfg);
    const auto batch = sampler->next_batch();
    CHECK(batch.size() == 2);
    CHECK(*batch.flow_fields[0] == field);
}

TEST_CASE("a failing source is skipped and reported") {
    auto cfg = tiny_config(2, 1, 5);
    cfg.cycle_sources = false;
    auto loader = [](const FlowSource& s, int h, int w) {
        if (source_number(s) == 3) throw FormatError(FormatError::Kind::bad_magic, "corrupt");
        return numbered_field(s, h, w);
    };
    Sampler sampler(cfg, loader);
    std::vector<std::size_t> seen;
    try {
        for (int k = 0; k < 10; ++k) seen.push_back(sampler.next_batch().flow_source_indices[0]);
    } catch (const ExhaustedError&) {
    }
    CHECK(seen == std::vector<std::size_t>{0, 1, 2, 4});
    CHECK(sampler.exhausted());
    CHECK_THROWS_AS(sampler.next_batch(), ExhaustedError);
    const auto warnings = sampler.warnings();
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("source 3") != std::string::npos);
}

TEST_CASE("a source that keeps failing while cycling is reported once") {
    auto loader = [](const FlowSource& s, int h, int w) {
        if (source_number(s) == 1) throw FormatError(FormatError::Kind::truncated, "short");
        return numbered_field(s, h, w);
    };
    Sampler sampler(tiny_config(2, 1, 3), loader);
    for (int k = 0; k < 20; ++k) CHECK(sampler.next_batch().flow_source_indices[0] != 1);
    CHECK(sampler.warnings().size() == 1);
}

TEST_CASE("stream ends when every source fails") {
    std::atomic<int> calls{0};
    auto loader = [&](const FlowSource& s, int h, int w) {
        if (calls++ > 0) throw IoError("gone");
        return numbered_field(s, h, w);
    };
    Sampler sampler(tiny_config(2, 1, 3), loader);
    CHECK_NOTHROW(sampler.next_batch());
    CHECK_THROWS_AS(sampler.next_batch(), ExhaustedError);
    const auto warnings = sampler.warnings();
    CHECK(warnings.back().find("every flow source failed") != std::string::npos);
}

TEST_CASE("max_batches bounds the stream") {
    auto cfg = test::small_config(8, 2);
    cfg.max_batches = 3;
    Sampler sampler(cfg);
    for (int k = 0; k < 3; ++k) CHECK(sampler.next_batch().batch_index == std::uint64_t(k));
    CHECK(sampler.exhausted());
    CHECK_THROWS_AS(sampler.next_batch(), ExhaustedError);
}

TEST_CASE("producer blocks when the queue is full") {
    PrefetchQueue queue(named_sources(10), {4, true, 8, 8, 0}, numbered_field);
    std::this_thread::sleep_for(300ms);
    CHECK(queue.loads_attempted() == 4);
    CHECK(queue.peak_queued() == 4);
    CHECK(queue.pop()->source_index == 0);
    std::this_thread::sleep_for(300ms);
    CHECK(queue.loads_attempted() == 5);
    CHECK(queue.peak_queued() == 4);
}

TEST_CASE("sources cycle in list order") {
    PrefetchQueue queue(named_sources(3), {2, true, 8, 8, 0}, numbered_field);
    std::vector<std::size_t> order;
    for (int k = 0; k < 7; ++k) order.push_back(queue.pop()->source_index);
    CHECK(order == std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 0});
}

TEST_CASE("without cycling the queue drains and ends") {
    PrefetchQueue queue(named_sources(3), {2, false, 8, 8, 0}, numbered_field);
    for (std::size_t k = 0; k < 3; ++k) CHECK(queue.pop()->source_index == k);
    CHECK_FALSE(queue.pop().has_value());
}

TEST_CASE("fault injection: 4 of 5 fields arrive") {
    auto loader = [](const FlowSource& s, int h, int w) {
        if (source_number(s) == 3) throw FormatError(FormatError::Kind::truncated, "short file");
        return numbered_field(s, h, w);
    };
    PrefetchQueue queue(named_sources(5), {2, false, 8, 8, 0}, loader);
    int received = 0;
    while (queue.pop()) ++received;
    CHECK(received == 4);
    CHECK(queue.warnings().size() == 1);
}

TEST_CASE("cycling is fair across sources") {
    for (std::size_t sources : {3u, 4u, 7u}) {
        auto cfg = tiny_config(4, 2, sources);
        Sampler sampler(cfg, numbered_field);
        std::map<std::size_t, int> uses;
        for (int b = 0; b < 2 * 1 * 11; ++b) {
            const auto batch = sampler.next_batch();
            for (std::size_t i = 0; i < batch.size(); i += 2) ++uses[batch.flow_source_indices[i]];
        }
        int lo = 1 << 30, hi = 0;
        for (const auto& [index, count] : uses) {
            lo = std::min(lo, count);
            hi = std::max(hi, count);
        }
        CHECK(uses.size() == sources);
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("resident fields stay within capacity plus F") {
    auto cfg = tiny_config(6, 3, 9);
    cfg.prefetch_capacity = 4;
    Sampler sampler(cfg, [](const FlowSource& s, int h, int w) {
        std::this_thread::sleep_for(2ms);
        return numbered_field(s, h, w);
    });
    for (int b = 0; b < 12; ++b) sampler.next_batch();
    CHECK(sampler.peak_resident_fields() <= 4 + 3);
}

TEST_CASE("next_batch never deadlocks under slow loads") {
    auto cfg = tiny_config(4, 2, 5);
    cfg.prefetch_capacity = 2;
    const bool done = finishes_within(60s, [&] {
        Sampler sampler(cfg, [](const FlowSource& s, int h, int w) {
            std::this_thread::sleep_for(1ms);
            if (source_number(s) == 2) throw IoError("bad");
            return numbered_field(s, h, w);
        });
        for (int b = 0; b < 50; ++b) sampler.next_batch();
    });
    CHECK(done);
}

TEST_CASE("concurrent consumers are rejected") {
    std::promise<void> entered;
    std::shared_future<void> release_gate;
    std::promise<void> release;
    release_gate = release.get_future().share();
    std::atomic<int> calls{0};
    auto loader = [&](const FlowSource& s, int h, int w) {
        if (calls++ == 1) {
            entered.set_value();
            release_gate.wait();
        }
        return numbered_field(s, h, w);
    };
    Sampler sampler(tiny_config(2, 1, 3), loader);
    sampler.next_batch();  // field 0, loaded up front
    auto first = std::async(std::launch::async, [&] { return sampler.next_batch(); });
    entered.get_future().wait();
    std::this_thread::sleep_for(50ms);
    CHECK_THROWS_AS(sampler.next_batch(), GenerationError);
    release.set_value();
    CHECK(first.get().batch_index == 1);
}

TEST_CASE("dense views") {
    const auto cfg = test::small_config(12, 3);
    Sampler sampler(cfg);
    const auto batch = sampler.next_batch();
    const auto images = batch.dense_images(2);
    REQUIRE(images.size() == 3u * 12 * 12);
    CHECK(images[1 * 144 + 5 * 12 + 7] == batch.images2[1].at(5, 7));
    const auto flows = batch.dense_flows();
    REQUIRE(flows.size() == 3u * 12 * 12 * 2);
    CHECK(flows[2 * (2 * 144 + 3)] == batch.flow_fields[2]->u[3]);
    CHECK(flows[2 * (2 * 144 + 3) + 1] == batch.flow_fields[2]->v[3]);
}

TEST_CASE("pair parameters are recorded") {
    auto cfg = test::small_config(32, 4);
    cfg.seeding_density_range = {0.02, 0.05};
    cfg.diameter_range = {1.0, 2.0};
    Sampler sampler(cfg);
    const auto batch = sampler.next_batch();
    for (const auto& p : batch.params) {
        CHECK(p.seeding_density >= 0.02);
        CHECK(p.seeding_density <= 0.05);
        CHECK(p.particle_count == cfg.particle_count());
        CHECK(p.diameters.size() == p.particle_count);
        CHECK(p.patch_side == patch_side(p.max_diameter));
        CHECK(p.diameter_realized.min >= 1.0);
        CHECK(p.diameter_realized.max <= 2.0);
    }
}
