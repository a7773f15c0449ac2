#include "splatpiv/prefetch.hpp"

#include "splatpiv/error.hpp"

#include <algorithm>

namespace splatpiv {

PrefetchQueue::PrefetchQueue(std::vector<FlowSource> sources, Options options, FieldLoader loader,
                             std::optional<LoadedField> preloaded)
    : sources_(std::move(sources)),
      options_(options),
      loader_(loader ? std::move(loader) : FieldLoader(load_source)),
      queue_(options.capacity),
      function_cache_(sources_.size()) {
    if (preloaded) queue_.push(std::move(*preloaded));
    producer_ = std::jthread([this](std::stop_token stop) { produce(stop); });
}

PrefetchQueue::~PrefetchQueue() {
    producer_.request_stop();
    queue_.close();
}

void PrefetchQueue::produce(std::stop_token stop) {
    const std::size_t count = sources_.size();
    if (count == 0) {
        queue_.close();
        return;
    }

    std::size_t index = options_.start_index % count;
    std::size_t failures_in_a_row = 0;
    bool wrapped = options_.start_index >= count;

    while (!stop.stop_requested()) {
        if (index == 0 && wrapped && !options_.cycle) break;

        // Reserve a slot before loading so at most `capacity` fields are held here.
        if (!queue_.wait_for_space()) return;

        const FlowSource& source = sources_[index];
        std::shared_ptr<const FlowField> field;
        try {
            {
                const std::lock_guard lock(side_mutex_);
                ++attempts_;
            }
            if (source.format == FlowFormat::function && function_cache_[index]) {
                field = function_cache_[index];
            } else {
                field = std::make_shared<const FlowField>(loader_(source, options_.height, options_.width));
                if (source.format == FlowFormat::function) function_cache_[index] = field;
            }
        } catch (const std::exception& e) {
            std::string message = "skipping flow source " + std::to_string(index) + " ('" +
                                  (source.path.empty() ? source.function : source.path) + "'): " + e.what();
            // A bad source fails again on every cycle; report it once.
            const std::lock_guard lock(side_mutex_);
            if (std::find(warnings_.begin(), warnings_.end(), message) == warnings_.end()) {
                warnings_.push_back(std::move(message));
            }
        }

        if (field) {
            failures_in_a_row = 0;
            if (!queue_.push({index, std::move(field)})) return;
        } else if (++failures_in_a_row >= count) {
            const std::lock_guard lock(side_mutex_);
            warnings_.push_back("every flow source failed to load; stream exhausted");
            break;
        }

        if (++index == count) {
            index = 0;
            wrapped = true;
        }
    }
    queue_.close();
}

std::optional<LoadedField> PrefetchQueue::pop() { return queue_.pop(); }

std::vector<std::string> PrefetchQueue::warnings() const {
    const std::lock_guard lock(side_mutex_);
    return warnings_;
}

std::size_t PrefetchQueue::loads_attempted() const {
    const std::lock_guard lock(side_mutex_);
    return attempts_;
}

}  // namespace splatpiv
