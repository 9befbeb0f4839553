#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace dtr {

// Counter-based pseudo-random generator "splitmix64-ctr v1".
//
// Output i of a stream keyed by `seed` is the splitmix64 finalizer applied to
// seed + (i+1) * golden-gamma. The generator is a pure function of
// (seed, counter), so streams are reproducible bit-for-bit across platforms
// and runs, and sub-streams can be derived without sharing state.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (++ctr_) * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as a log() argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller without caching the spare value; two draws per variate keeps
    // the stream position a pure function of the call count.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // +1 / -1 with equal probability.
    int rademacher() { return bernoulli(0.5) ? 1 : -1; }

    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Documented sub-stream split: derive(seed, k) finalizes
    // (seed ^ salt) + (k+1) * golden-gamma. Independent workers (Monte-Carlo
    // replications, per-trajectory streams) use derive() with distinct k.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = (seed ^ 0xa0761d6478bd642fULL) + (stream + 1) * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

}  // namespace dtr
