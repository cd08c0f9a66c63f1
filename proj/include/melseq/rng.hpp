#pragma once

#include <cstdint>
#include <cmath>

namespace melseq {

// splitmix64-based generator. Used everywhere randomness is needed so runs
// are bit-identical across platforms for a given seed; std:: distributions
// are implementation-defined and would break that.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

    // Independent stream derived from (seed, tag); tags keep the teacher
    // forcing, dropout and shuffling streams decoupled so checkpoint resume
    // only needs counters, not generator state.
    static Rng derive(std::uint64_t seed, std::uint64_t tag) {
        Rng mix(seed ^ (0x9e3779b97f4a7c15ULL * (tag + 1)));
        mix.next_u64();
        return Rng(mix.next_u64());
    }

private:
    std::uint64_t state_;
};

}  // namespace melseq
