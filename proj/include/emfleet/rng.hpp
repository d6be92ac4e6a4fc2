#ifndef EMFLEET_RNG_HPP
#define EMFLEET_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace emfleet {

// Counter-based random stream: the state is a key derived by hashing the
// master seed with a stream tag tuple, and each draw hashes key + counter
// (splitmix64 finalizer). Any (sample, step, checkpoint) substream can be
// regenerated in isolation, so generation order and worker count never
// affect the output. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::initializer_list<std::uint64_t> key_words) {
        key_ = 0x9e3779b97f4a7c15ULL;
        for (const std::uint64_t w : key_words) key_ = mix(key_ ^ mix(w));
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
    }

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace emfleet

#endif  // EMFLEET_RNG_HPP
