#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace splatpiv {

/// Purpose tags separating the independent random streams of one pair.
enum class Stream : std::uint64_t {
    position = 1,
    appearance = 2,
    perturb = 3,
    hide = 4,
    noise = 5,
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

/// SplitMix64 output function (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t word) noexcept {
    return mix64(h ^ (word + kGolden + (h << 6) + (h >> 2)));
}

}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Counter-based random key.
 *
 * A key is the hash of (seed, stream, batch, pair, lane). Draw number `c`
 * from a key is the SplitMix64 output at step c+1 of a generator whose
 * state starts at the key, so any draw can be computed without touching
 * the others. This layout is frozen: changing it changes every dataset.
 */
class RngKey {
  public:
    constexpr RngKey(std::uint64_t seed, Stream stream, std::uint64_t batch,
                     std::uint64_t pair, std::uint64_t lane = 0) noexcept
        : state_(derive(seed, stream, batch, pair, lane)) {}

    constexpr std::uint64_t state() const noexcept { return state_; }

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return detail::mix64(state_ + (counter + 1) * detail::kGolden);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    double uniform(std::uint64_t counter, double lo, double hi) const noexcept {
        return lo + (hi - lo) * uniform(counter);
    }

    /// Standard normal from draws 2c and 2c+1 (Box-Muller, cosine branch).
    double normal(std::uint64_t counter) const noexcept {
        // 1 - u lies in (0, 1], so the log is finite.
        const double u1 = 1.0 - uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    friend constexpr bool operator==(const RngKey&, const RngKey&) = default;

  private:
    static constexpr std::uint64_t derive(std::uint64_t seed, Stream stream,
                                          std::uint64_t batch, std::uint64_t pair,
                                          std::uint64_t lane) noexcept {
        std::uint64_t h = detail::mix64(seed + detail::kGolden);
        h = detail::combine(h, static_cast<std::uint64_t>(stream));
        h = detail::combine(h, batch);
        h = detail::combine(h, pair);
        return detail::combine(h, lane);
    }

    std::uint64_t state_;
};

/// The five keys used to generate one image pair.
struct PairKeys {
    std::uint64_t seed;
    std::uint64_t batch;
    std::uint64_t pair;

    RngKey position() const noexcept { return {seed, Stream::position, batch, pair}; }
    RngKey appearance(std::uint64_t lane = 0) const noexcept {
        return {seed, Stream::appearance, batch, pair, lane};
    }
    RngKey perturb() const noexcept { return {seed, Stream::perturb, batch, pair}; }
    RngKey hide(int frame) const noexcept {
        return {seed, Stream::hide, batch, pair, static_cast<std::uint64_t>(frame)};
    }
    RngKey noise(int frame) const noexcept {
        return {seed, Stream::noise, batch, pair, static_cast<std::uint64_t>(frame)};
    }
};

}  // namespace splatpiv
