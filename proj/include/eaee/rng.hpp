#ifndef EAEE_RNG_HPP
#define EAEE_RNG_HPP

#include <cstdint>
#include <random>

namespace eaee {

/// SplitMix64 finaliser (Steele, Lea & Flood 2014). Used only to derive seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/*
 * Random stream used throughout the library.
 *
 * The engine is std::mt19937_64. A stream is identified by a (master seed,
 * stream index) pair; its engine seed is splitmix64(splitmix64(seed) ^
 * splitmix64(stream + golden)). Work that is split across threads derives one
 * stream per entity (row, chain, replicate) so results never depend on the
 * schedule.
 *
 * Normal variates use std::normal_distribution, which is implementation
 * defined: draws are reproducible within one build/toolchain, not across them.
 */
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), engine_(derive(seed, stream)) {}

    /// Child stream keyed by `index`; independent of how much this stream has been used.
    Rng split(std::uint64_t index) const {
        return Rng(derive(seed_, stream_), index);
    }

    double uniform() { return uniform_(engine_); }
    double normal() { return normal_(engine_); }
    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, upper).
    std::uint64_t below(std::uint64_t upper) {
        return std::uniform_int_distribution<std::uint64_t>(0, upper - 1)(engine_);
    }

    engine_type& engine() { return engine_; }

    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    engine_type engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace eaee

#endif
