#include "splatpiv/thread_pool.hpp"

#include <algorithm>

namespace splatpiv {

namespace {

thread_local bool t_inside_loop = false;

class LoopScope {
  public:
    LoopScope() : previous_(t_inside_loop) { t_inside_loop = true; }
    ~LoopScope() { t_inside_loop = previous_; }

  private:
    bool previous_;
};

}  // namespace

ThreadPool::ThreadPool(int threads) {
    const int extra = std::max(threads, 1) - 1;
    workers_.reserve(extra);
    for (int i = 0; i < extra; ++i) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
    {
        const std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : workers_) t.join();
}

void ThreadPool::run(Job& job) {
    const LoopScope scope;
    for (;;) {
        const std::size_t i = job.next.fetch_add(1, std::memory_order_relaxed);
        if (i >= job.count) break;
        try {
            (*job.body)(i);
        } catch (...) {
            const std::lock_guard lock(job.error_mutex);
            if (!job.error) job.error = std::current_exception();
        }
        if (job.remaining.fetch_sub(1, std::memory_order_acq_rel) == 1) {
            const std::lock_guard lock(mutex_);
            finished_.notify_all();
        }
    }
}

void ThreadPool::worker_loop() {
    std::size_t seen = 0;
    for (;;) {
        Job* job = nullptr;
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stopping_ || (job_ != nullptr && generation_ != seen); });
            if (stopping_) return;
            seen = generation_;
            job = job_;
            ++active_;
        }
        run(*job);
        {
            const std::lock_guard lock(mutex_);
            --active_;
        }
        finished_.notify_all();
    }
}

void ThreadPool::parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    if (count == 1) {
        body(0);
        return;
    }
    if (t_inside_loop || workers_.empty()) {
        const LoopScope scope;
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    const std::lock_guard submit(submit_mutex_);
    Job job;
    job.body = &body;
    job.count = count;
    job.remaining.store(count);
    {
        const std::lock_guard lock(mutex_);
        job_ = &job;
        ++generation_;
    }
    wake_.notify_all();
    run(job);
    {
        std::unique_lock lock(mutex_);
        // Workers still holding the job pointer must leave run() before it dies.
        finished_.wait(lock, [&] {
            return job.remaining.load(std::memory_order_acquire) == 0 && active_ == 0;
        });
        job_ = nullptr;
    }
    if (job.error) std::rethrow_exception(job.error);
}

}  // namespace splatpiv
