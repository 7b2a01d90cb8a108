#ifndef WVFIELD_RNG_HPP
#define WVFIELD_RNG_HPP

#include <cstdint>

namespace wvf {

// Counter-seeded generator with independently addressable substreams.
// Substream (seed, index) is fully determined by its key, so shots can be
// partitioned across workers in any order and still reproduce bit-exactly.
// Core is splitmix64; doubles are built from the top 53 bits, which keeps
// the byte-level output independent of the platform's distribution code.
class SubstreamRng {
  public:
    SubstreamRng(std::uint64_t seed, std::uint64_t stream_index)
        : state_(mix(mix(seed + 0x9e3779b97f4a7c15ull) ^
                     mix(stream_index + 0xbf58476d1ce4e5b9ull))) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        return mix(z);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection sampling keeps the draw exactly uniform.
        const std::uint64_t limit = n * ((~0ull) / n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace wvf

#endif
