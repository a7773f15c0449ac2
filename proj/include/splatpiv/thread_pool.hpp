#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace splatpiv {

/**
 * Fixed-size pool running one index-parallel loop at a time.
 *
 * The calling thread takes part in the loop. A parallel_for issued from
 * inside a running loop body executes serially on the calling thread, so
 * nested parallelism never deadlocks.
 */
class ThreadPool {
  public:
    explicit ThreadPool(int threads);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int size() const noexcept { return static_cast<int>(workers_.size()) + 1; }

    /// Run body(i) for i in [0, count); rethrows the first exception raised by a body.
    void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

  private:
    struct Job {
        const std::function<void(std::size_t)>* body = nullptr;
        std::size_t count = 0;
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> remaining{0};
        std::exception_ptr error;
        std::mutex error_mutex;
    };

    void worker_loop();
    void run(Job& job);

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable finished_;
    std::mutex submit_mutex_;
    Job* job_ = nullptr;
    std::size_t generation_ = 0;
    std::size_t active_ = 0;
    bool stopping_ = false;
};

}  // namespace splatpiv
