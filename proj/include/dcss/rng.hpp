#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dcss {

namespace detail {

// splitmix64 finalizer; used to turn (seed, stream-id...) tuples into
// well-separated engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

}  // namespace detail

// Seeded random stream. Identical (seed, stream_id) always reproduces the
// same draw sequence, independent of platform and thread count: the Gaussian
// and integer samplers below are implemented by hand rather than through
// std distributions, whose algorithms are implementation-defined.
//
// Streams are single-owner; derive one substream per (trial, node) instead
// of sharing.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : engine_(detail::mix(detail::splitmix64(seed), stream_id)) {}

    // Derives a stream keyed by an arbitrary id path, e.g.
    // {trial_index, su_index}.
    static RngStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
        std::uint64_t h = detail::splitmix64(seed);
        for (std::uint64_t id : ids) h = detail::mix(h, id);
        return RngStream(h);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n); rejection sampling keeps the result exactly
    // uniform and engine-order deterministic.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    // Standard Box-Muller with a cached spare.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    // Fisher-Yates using this stream; std::shuffle is not portable
    // across standard library implementations.
    template <typename RandomIt>
    void shuffle(RandomIt first, RandomIt last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const std::uint64_t j = uniform_int(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    explicit RngStream(std::uint64_t mixed_state) : engine_(mixed_state) {}

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dcss
