#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace specbound {

// Seeded deterministic generator. The engine is std::mt19937_64, whose
// output sequence is pinned bit-exactly by the C++ standard, so identical
// seeds give identical streams on every platform. std::normal_distribution
// is implementation-defined, hence the explicit Box-Muller transform here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1), 53 bits
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [lo, hi] inclusive, by rejection-free modulo on 64 bits
    // (bias is < 2^-50 for the ranges used here)
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(engine_() % span);
    }

    // standard normal, Box-Muller with one cached draw
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(two_pi * u2);
        has_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

    double gaussian(double sigma) { return sigma * gaussian(); }

    // child_seed = splitmix64(parent ^ golden-ratio stride of index);
    // parallel workers derive independent streams deterministically.
    static std::uint64_t child_seed(std::uint64_t parent, std::uint64_t index) {
        std::uint64_t z = parent + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    Rng child(std::uint64_t index) const { return Rng(child_seed(seed_, index)); }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace specbound
