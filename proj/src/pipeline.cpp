#include "splatpiv/pipeline.hpp"

#include "splatpiv/error.hpp"

#include <algorithm>
#include <cstring>

namespace splatpiv {

std::vector<float> ImagePairBatch::dense_images(int frame) const {
    const auto& images = frame == 1 ? images1 : images2;
    const std::size_t plane = std::size_t(height) * width;
    std::vector<float> out(images.size() * plane);
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::memcpy(out.data() + i * plane, images[i].pixels.data(), plane * sizeof(float));
    }
    return out;
}

std::vector<float> ImagePairBatch::dense_flows() const {
    const std::size_t plane = std::size_t(height) * width;
    std::vector<float> out(flow_fields.size() * plane * 2);
    for (std::size_t i = 0; i < flow_fields.size(); ++i) {
        const FlowField& f = *flow_fields[i];
        float* dst = out.data() + i * plane * 2;
        for (std::size_t k = 0; k < plane; ++k) {
            dst[2 * k] = f.u[k];
            dst[2 * k + 1] = f.v[k];
        }
    }
    return out;
}

ImagePairBatch render_batch(const GeneratorConfig& cfg, std::uint64_t batch_index,
                            std::span<const LoadedField> window, ThreadPool& pool) {
    const std::size_t pairs = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t per_field = static_cast<std::size_t>(cfg.pairs_per_field());
    if (window.size() != static_cast<std::size_t>(cfg.flow_fields_per_batch)) {
        throw GenerationError("field window holds " + std::to_string(window.size()) + " fields, expected " +
                              std::to_string(cfg.flow_fields_per_batch));
    }

    ImagePairBatch batch;
    batch.batch_index = batch_index;
    batch.height = cfg.image_height;
    batch.width = cfg.image_width;
    batch.images1.resize(pairs);
    batch.images2.resize(pairs);
    batch.flow_fields.resize(pairs);
    batch.flow_source_indices.resize(pairs);
    batch.params.resize(pairs);

    pool.parallel_for(pairs, [&](std::size_t i) {
        const LoadedField& source = window[i / per_field];
        const PairKeys keys{cfg.seed, batch_index, i};

        SampledParticles particles = make_pair_particles(keys, cfg, *source.field);
        const int side = patch_side(max_effective_diameter(particles.set, particles.params, cfg), cfg.patch_scale);
        particles.params.patch_side = side;

        auto [first, second] = render_pair(particles.set, cfg.image_height, cfg.image_width, side, cfg.noise,
                                           cfg.target_histogram, keys, &pool);
        batch.images1[i] = std::move(first);
        batch.images2[i] = std::move(second);
        batch.flow_fields[i] = source.field;
        batch.flow_source_indices[i] = source.source_index;
        batch.params[i] = std::move(particles.params);
    });
    return batch;
}

Sampler::Sampler(GeneratorConfig cfg, FieldLoader loader)
    : cfg_(std::move(cfg)), pool_(cfg_.resolved_threads()) {
    validate(cfg_);
    if (cfg_.flow_sources.empty()) throw ConfigError("flow_sources", "source list is empty");
    if (!loader) loader = load_source;

    // Fail fast: the first source must load before the stream starts.
    LoadedField first{0, std::make_shared<const FlowField>(
                             loader(cfg_.flow_sources.front(), cfg_.image_height, cfg_.image_width))};

    PrefetchQueue::Options options;
    options.capacity = static_cast<std::size_t>(cfg_.resolved_prefetch_capacity());
    options.cycle = cfg_.cycle_sources;
    options.height = cfg_.image_height;
    options.width = cfg_.image_width;
    options.start_index = 1;
    prefetch_ = std::make_unique<PrefetchQueue>(cfg_.flow_sources, options, std::move(loader), std::move(first));
}

bool Sampler::exhausted() const noexcept {
    return ended_ || (cfg_.max_batches > 0 && next_index_ >= cfg_.max_batches);
}

void Sampler::advance_window() {
    window_.clear();
    for (int f = 0; f < cfg_.flow_fields_per_batch; ++f) {
        auto next = prefetch_->pop();
        if (!next) {
            ended_ = true;
            window_.clear();
            throw ExhaustedError("flow-field stream exhausted at batch " + std::to_string(next_index_));
        }
        window_.push_back(std::move(*next));
    }
    window_peak_ = std::max(window_peak_, window_.size());
}

ImagePairBatch Sampler::next_batch() {
    if (busy_.exchange(true)) throw GenerationError("concurrent next_batch calls on one sampler");
    struct Release {
        std::atomic<bool>& flag;
        ~Release() { flag = false; }
    } release{busy_};

    if (exhausted()) throw ExhaustedError("sampler exhausted after " + std::to_string(next_index_) + " batches");

    const auto window_id = static_cast<std::int64_t>(next_index_ / std::uint64_t(cfg_.batches_per_flow_field));
    if (window_id != window_id_) {
        advance_window();
        window_id_ = window_id;
    }
    ImagePairBatch batch = render_batch(cfg_, next_index_, window_, pool_);
    ++next_index_;
    return batch;
}

std::unique_ptr<Sampler> make_sampler(const GeneratorConfig& cfg, FieldLoader loader) {
    return std::make_unique<Sampler>(cfg, std::move(loader));
}

std::unique_ptr<Sampler> make_sampler(const std::filesystem::path& config_path) {
    return make_sampler(load_config(config_path));
}

}  // namespace splatpiv
