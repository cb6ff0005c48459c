#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace xdef {

// Deterministic generator with hand-rolled distributions so sampled
// sequences do not depend on standard-library internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int n) {  // [0, n)
        if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
        return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
    }

    double normal() {
        // Box-Muller, one value per call
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    int poisson(double mean) {
        if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
        if (mean == 0.0) return 0;
        // Knuth's method; fine for the small means used here
        double limit = std::exp(-mean);
        double p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    bool bernoulli(double p) { return uniform() < p; }

    int categorical(const std::vector<double>& probs) {
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    // derive an independent stream, e.g. per worker or per step
    Rng split(std::uint64_t salt) const {
        std::uint64_t s = seed_ + 0x9E3779B97F4A7C15ull;
        s ^= salt * 0xD1B54A32D192ED03ull;
        s ^= s >> 27;
        s *= 0x94D049BB133111EBull;
        s ^= s >> 31;
        return Rng(s);
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::mt19937_64 eng_;
    std::uint64_t seed_;
};

}  // namespace xdef
