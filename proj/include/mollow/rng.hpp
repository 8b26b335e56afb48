#ifndef MOLLOW_RNG_HPP
#define MOLLOW_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>

namespace mollow {

/// Counter-based generator: output k is splitmix64(key + k * golden).
/// Streams for parallel segments come from split(id), which derives a new key
/// from (key, id); outputs of distinct streams never share a counter sequence.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

    /// Uniform in (0, 1).
    double uniform()
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential waiting time with the given rate.
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    CounterRng split(std::uint64_t stream_id) const
    {
        CounterRng child;
        child.key_ = mix(key_ ^ mix(stream_id + kGolden));
        return child;
    }

    std::uint64_t counter() const { return counter_; }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace mollow

#endif // MOLLOW_RNG_HPP
