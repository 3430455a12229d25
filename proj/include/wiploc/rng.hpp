#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace wiploc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Seed of a named sub-stream. The same (seed, keys...) always yields the
/// same value, independent of how many other streams were drawn before.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
{
    std::uint64_t h = splitmix64(seed);
    for (auto k : keys)
        h = splitmix64(h ^ splitmix64(k));
    return h;
}

enum class Stream : std::uint64_t {
    Collision = 1,
    AdcPhase = 2,
    Sweep = 3,
};

inline Rng make_stream(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> keys = {})
{
    std::uint64_t h = derive_seed(seed, {static_cast<std::uint64_t>(stream)});
    for (auto k : keys)
        h = splitmix64(h ^ splitmix64(k));
    return Rng(h);
}

/// Fair coin flips drawn 64 at a time from the engine's raw output.
class CoinFlipper {
  public:
    explicit CoinFlipper(Rng& rng)
        : rng_(rng)
    {
    }

    std::uint8_t flip()
    {
        if (left_ == 0) {
            bits_ = rng_();
            left_ = 64;
        }
        const auto b = static_cast<std::uint8_t>(bits_ & 1u);
        bits_ >>= 1;
        --left_;
        return b;
    }

  private:
    Rng& rng_;
    std::uint64_t bits_ = 0;
    int left_ = 0;
};

} // namespace wiploc
