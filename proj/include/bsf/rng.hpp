#pragma once

#include <cstdint>
#include <cstddef>

#include "bsf/tensor.hpp"

namespace bsf {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Deterministic random stream: xoshiro256** seeded through splitmix64.
/// Same (seed, stream_id) gives the same sequence on every platform;
/// distinct stream_ids hash to unrelated initial states.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) {
        std::uint64_t sm = seed;
        // fold the stream id into the seeding chain before state expansion
        sm ^= detail::splitmix64(stream_id);
        for (auto& s : state_) s = detail::splitmix64(sm);
    }

    /// Independent stream derived from this stream's origin by label.
    RngStream derive(std::uint64_t label) const {
        RngStream r(0);
        std::uint64_t sm = state_[0] ^ detail::splitmix64(label);
        for (auto& s : r.state_) s = detail::splitmix64(sm);
        return r;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }

private:
    std::uint64_t state_[4] = {};
};

/// n uniforms in [0,1) as a rank-1 tensor.
inline Tensor rng_uniform(RngStream& stream, std::size_t n) {
    Tensor t({n});
    for (std::size_t i = 0; i < n; ++i) t[i] = stream.uniform();
    return t;
}

/// Fisher-Yates shuffle driven by the stream.
template <class T>
inline void shuffle(std::vector<T>& v, RngStream& stream) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = stream.uniform_index(i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace bsf
