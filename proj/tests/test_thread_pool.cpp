#include "splatpiv/thread_pool.hpp"

#include <doctest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

using splatpiv::ThreadPool;

TEST_CASE("every index runs exactly once") {
    for (int threads : {1, 2, 5}) {
        ThreadPool pool(threads);
        CHECK(pool.size() == threads);
        for (std::size_t count : {0u, 1u, 7u, 1000u}) {
            std::vector<std::atomic<int>> hits(count);
            pool.parallel_for(count, [&](std::size_t i) { ++hits[i]; });
            for (auto& h : hits) CHECK(h.load() == 1);
        }
    }
}

TEST_CASE("nested loops run inline without deadlock") {
    ThreadPool pool(4);
    std::atomic<int> total{0};
    pool.parallel_for(8, [&](std::size_t) { pool.parallel_for(8, [&](std::size_t) { ++total; }); });
    CHECK(total.load() == 64);
}

TEST_CASE("a throwing body propagates after the loop drains") {
    ThreadPool pool(3);
    std::atomic<int> ran{0};
    CHECK_THROWS_AS(pool.parallel_for(100,
                                      [&](std::size_t i) {
                                          ++ran;
                                          if (i == 37) throw std::runtime_error("boom");
                                      }),
                    std::runtime_error);
    // The pool stays usable.
    std::atomic<int> after{0};
    pool.parallel_for(10, [&](std::size_t) { ++after; });
    CHECK(after.load() == 10);
}

TEST_CASE("many short loops in a row") {
    ThreadPool pool(4);
    long sum = 0;
    for (int round = 0; round < 2000; ++round) {
        std::atomic<long> part{0};
        pool.parallel_for(5, [&](std::size_t i) { part += long(i); });
        sum += part.load();
    }
    CHECK(sum == 2000L * 10);
}
