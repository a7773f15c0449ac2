#pragma once

#include "splatpiv/config.hpp"
#include "splatpiv/flowfield.hpp"
#include "splatpiv/particles.hpp"
#include "splatpiv/prefetch.hpp"
#include "splatpiv/raster.hpp"
#include "splatpiv/thread_pool.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace splatpiv {

/// B rendered pairs with their ground truth and realized parameters.
struct ImagePairBatch {
    std::uint64_t batch_index = 0;
    int height = 0;
    int width = 0;
    std::vector<Image> images1;
    std::vector<Image> images2;
    /// One entry per pair; pairs rendered from the same field share the pointer.
    std::vector<std::shared_ptr<const FlowField>> flow_fields;
    std::vector<std::size_t> flow_source_indices;
    std::vector<PairParams> params;

    std::size_t size() const noexcept { return images1.size(); }

    /// Frame `frame` (1 or 2) of every pair as one contiguous B x H x W array.
    std::vector<float> dense_images(int frame) const;
    /// Ground truth as one contiguous B x H x W x 2 array of (u, v).
    std::vector<float> dense_flows() const;
};

/// Render batch `batch_index` from an explicit window of F fields. Pure given its inputs.
ImagePairBatch render_batch(const GeneratorConfig& cfg, std::uint64_t batch_index,
                            std::span<const LoadedField> window, ThreadPool& pool);

/**
 * Infinite (or max_batches-bounded) stream of batches.
 *
 * Batch b draws on field window floor(b / R); each window holds the next
 * F fields of the prefetch stream. Output depends only on the config,
 * its seed and the contents of the sources. Single consumer only.
 */
class Sampler {
  public:
    explicit Sampler(GeneratorConfig cfg, FieldLoader loader = {});

    /// Throws ExhaustedError when the stream has ended.
    ImagePairBatch next_batch();

    const GeneratorConfig& config() const noexcept { return cfg_; }
    std::uint64_t batch_index() const noexcept { return next_index_; }
    bool exhausted() const noexcept;

    /// Skipped-source reports from the prefetch thread.
    std::vector<std::string> warnings() const { return prefetch_->warnings(); }
    /// Upper bound on fields the sampler has held at once (queue + window).
    std::size_t peak_resident_fields() const { return prefetch_->peak_queued() + window_peak_; }

  private:
    void advance_window();

    GeneratorConfig cfg_;
    ThreadPool pool_;
    std::unique_ptr<PrefetchQueue> prefetch_;
    std::vector<LoadedField> window_;
    std::size_t window_peak_ = 0;
    std::int64_t window_id_ = -1;
    std::uint64_t next_index_ = 0;
    bool ended_ = false;
    std::atomic<bool> busy_{false};
};

/// Validates the source list and loads the first source synchronously (fail fast).
std::unique_ptr<Sampler> make_sampler(const GeneratorConfig& cfg, FieldLoader loader = {});
std::unique_ptr<Sampler> make_sampler(const std::filesystem::path& config_path);

}  // namespace splatpiv
