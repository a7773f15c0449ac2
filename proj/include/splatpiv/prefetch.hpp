#pragma once

#include "splatpiv/config.hpp"
#include "splatpiv/flowfield.hpp"

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

namespace splatpiv {

/// Blocking FIFO of bounded capacity for one producer and one consumer.
template <typename T>
class BoundedQueue {
  public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

    /// Wait until a push would not block. False once the queue is closed.
    bool wait_for_space() {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        return !closed_;
    }

    bool push(T item) {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) return false;
        items_.push_back(std::move(item));
        peak_ = std::max(peak_, items_.size());
        not_empty_.notify_one();
        return true;
    }

    /// Next item, or nullopt once the queue is closed and drained.
    std::optional<T> pop() {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    /// Wakes every waiter; queued items stay poppable.
    void close() {
        {
            const std::lock_guard lock(mutex_);
            closed_ = true;
        }
        not_full_.notify_all();
        not_empty_.notify_all();
    }

    std::size_t capacity() const noexcept { return capacity_; }

    std::size_t size() const {
        const std::lock_guard lock(mutex_);
        return items_.size();
    }

    std::size_t peak_size() const {
        const std::lock_guard lock(mutex_);
        return peak_;
    }

  private:
    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<T> items_;
    std::size_t peak_ = 0;
    bool closed_ = false;
};

/// A decoded field tagged with the source it came from.
struct LoadedField {
    std::size_t source_index = 0;
    std::shared_ptr<const FlowField> field;
};

/// Loads one source on to the image grid. Injectable for tests.
using FieldLoader = std::function<FlowField(const FlowSource&, int height, int width)>;

/**
 * Background flow-field loader feeding a bounded queue.
 *
 * Sources are loaded in list order, cycling when enabled. A source that
 * fails to load is skipped and reported once through warnings(). The stream
 * ends when a full pass over the list yields nothing, or after one pass
 * when cycling is off.
 */
class PrefetchQueue {
  public:
    struct Options {
        std::size_t capacity = 2;
        bool cycle = true;
        int height = 0;
        int width = 0;
        /// Source index the producer starts at.
        std::size_t start_index = 0;
    };

    PrefetchQueue(std::vector<FlowSource> sources, Options options, FieldLoader loader,
                  std::optional<LoadedField> preloaded = std::nullopt);
    ~PrefetchQueue();

    PrefetchQueue(const PrefetchQueue&) = delete;
    PrefetchQueue& operator=(const PrefetchQueue&) = delete;

    /// Blocks until a field is available; nullopt when the stream has ended.
    std::optional<LoadedField> pop();

    std::vector<std::string> warnings() const;
    std::size_t capacity() const noexcept { return queue_.capacity(); }
    std::size_t peak_queued() const { return queue_.peak_size(); }
    std::size_t loads_attempted() const;

  private:
    void produce(std::stop_token stop);

    std::vector<FlowSource> sources_;
    Options options_;
    FieldLoader loader_;
    BoundedQueue<LoadedField> queue_;
    std::vector<std::shared_ptr<const FlowField>> function_cache_;

    mutable std::mutex side_mutex_;
    std::vector<std::string> warnings_;
    std::size_t attempts_ = 0;

    std::jthread producer_;
};

}  // namespace splatpiv
