#pragma once

#include <cstdint>
#include <random>

namespace tacos {

/// Seedable random stream. Identical (seed, stream_id) pairs reproduce the
/// same draw sequence bit-exactly on a given build. Rollout workers take
/// distinct stream ids and never share a stream.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), engine_(mix(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Independent stream derived from this one's identity (does not consume state).
    RngStream substream(std::uint64_t i) const {
        return RngStream(seed_, mix(stream_id_, i + 1));
    }

    double normal() { return normal_(engine_); }
    double uniform() { return unit_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
    std::uint64_t next_u64() { return engine_(); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        return d(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    // splitmix64 finalizer; spreads (seed, stream) into the engine seed.
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

} // namespace tacos
