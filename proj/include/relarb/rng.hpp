#pragma once

// Counter-based random streams.
//
// Every Monte Carlo path owns its own Philox4x32-10 stream whose key is a
// hash of (master seed, tags...). Results therefore depend only on the path
// index, never on which thread ran it or in which order.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <utility>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace relarb {

/// SplitMix64 finalizer; used to derive keys, never as a sampling engine.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Fold a list of tags into a seed. Order matters; derive(s, {a, b}) and
/// derive(s, {b, a}) are unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> tags) noexcept
{
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t t : tags) {
        h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ull));
    }
    return h;
}

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). Satisfies
/// UniformRandomBitGenerator; the 64-bit key selects the stream and the
/// 128-bit counter walks through it.
class Philox4x32 {
  public:
    using result_type = std::uint32_t;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    explicit Philox4x32(std::uint64_t key, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream),
                   static_cast<std::uint32_t>(stream >> 32)}
    {
    }

    result_type operator()() noexcept
    {
        if (index_ == 4) {
            refill();
        }
        return block_[index_++];
    }

    void discard(std::uint64_t n) noexcept
    {
        while (n > 0) {
            if (index_ == 4) {
                // skip whole blocks without computing them
                const std::uint64_t blocks = n / 4;
                if (blocks > 0) {
                    bump(blocks);
                    n -= blocks * 4;
                    continue;
                }
                refill();
            }
            ++index_;
            --n;
        }
    }

    /// Raw block function: one 128-bit output for a given counter and key.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) noexcept
    {
        constexpr std::uint32_t kMulA = 0xD2511F53u;
        constexpr std::uint32_t kMulB = 0xCD9E8D57u;
        constexpr std::uint32_t kWeylA = 0x9E3779B9u;
        constexpr std::uint32_t kWeylB = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += kWeylA;
            key[1] += kWeylB;
        }
        return ctr;
    }

  private:
    void refill() noexcept
    {
        block_ = block(counter_, key_);
        bump(1);
        index_ = 0;
    }

    void bump(std::uint64_t n) noexcept
    {
        std::uint64_t lo = (std::uint64_t{counter_[1]} << 32) | counter_[0];
        lo += n;
        counter_[0] = static_cast<std::uint32_t>(lo);
        counter_[1] = static_cast<std::uint32_t>(lo >> 32);
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int index_ = 4;
};

/// Engine for an explicit (seed, tags...) coordinate.
inline Philox4x32 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags)
{
    const std::uint64_t key = derive_seed(seed, tags);
    return Philox4x32(key, splitmix64(key ^ 0x5851f42d4c957f2dull));
}

/// Independent streams for one Monte Carlo path: one per stock plus one
/// for bridge refinement. Stock i of path p is stream (seed, p, i), so
/// permuting stocks together with their streams permutes the path exactly.
class PathStreams {
  public:
    static constexpr std::uint64_t kBridgeTag = 0xb41d6eull << 40;

    PathStreams(std::uint64_t seed, std::uint64_t path, std::size_t n)
        : bridge_(make_stream(seed, {path, kBridgeTag}))
    {
        stocks_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            stocks_.push_back(make_stream(seed, {path, i}));
        }
    }

    PathStreams(std::vector<Philox4x32> stocks, Philox4x32 bridge)
        : stocks_(std::move(stocks)), bridge_(bridge)
    {
    }

    std::size_t size() const noexcept { return stocks_.size(); }
    Philox4x32& stock(std::size_t i) { return stocks_[i]; }
    Philox4x32& bridge() noexcept { return bridge_; }

  private:
    std::vector<Philox4x32> stocks_;
    Philox4x32 bridge_;
};

template <class Engine>
double standard_normal(Engine& eng)
{
    boost::random::normal_distribution<double> dist;
    return dist(eng);
}

template <class Engine>
double uniform01(Engine& eng)
{
    boost::random::uniform_01<double> dist;
    return dist(eng);
}

}  // namespace relarb
