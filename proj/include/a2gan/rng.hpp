#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace a2gan {

// All randomness in the project flows through RngStream so that runs are
// reproducible bit-for-bit across platforms. The generator is xoshiro256++
// seeded through splitmix64; distributions below are implemented explicitly
// instead of relying on std::<distribution>, whose output is
// implementation-defined.

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stable 64-bit hash of a string, used to derive independent substream
/// seeds from (master seed, stream name).
inline uint64_t hash64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class RngStream {
  public:
    RngStream() : RngStream(0) {}

    explicit RngStream(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : state_) {
            w = splitmix64(sm);
        }
    }

    /// Independent substream for (seed, name): used to keep e.g. dropout,
    /// latent sampling, and shuffling on separate named streams.
    static RngStream derive(uint64_t seed, std::string_view name) {
        return RngStream(seed ^ hash64(name));
    }

    static RngStream derive(uint64_t seed, std::string_view name, uint64_t index) {
        uint64_t mixed = seed ^ hash64(name);
        mixed += 0x632be59bd9b4e019ULL * (index + 1);
        return RngStream(mixed);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (no cached spare, keeps state minimal).
    double normal() {
        double u1 = u01();
        while (u1 <= 0.0) {
            u1 = u01();
        }
        constexpr double two_pi = 6.283185307179586476925286766559;
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(two_pi * u2);
    }

    /// Uniform integer in [0, n), n > 0. Rejection-free enough for our n.
    uint64_t uniform_int(uint64_t n) {
        // Multiply-shift (Lemire) without the rejection step would bias by
        // ~n/2^64; add the standard threshold rejection to keep it exact.
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t x = next_u64();
            const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
            if (static_cast<uint64_t>(m) >= threshold) {
                return static_cast<uint64_t>(m >> 64);
            }
        }
    }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t uniform_range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(uniform_int(static_cast<uint64_t>(hi - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

    std::array<uint64_t, 4> state() const { return state_; }
    void set_state(const std::array<uint64_t, 4>& s) { state_ = s; }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_{};
};

} // namespace a2gan
