#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace vtwin {

// SplitMix64 step, used to derive independent sub-seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Seed for stream `tag`/`index` under `base`. Distinct purposes get distinct
// tags so adding one consumer does not shift another stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0) {
    std::uint64_t s = base ^ (tag * 0xd6e8feb86659fd93ull) ^ (index * 0xa5a5a5a5a5a5a5a5ull);
    std::uint64_t first = splitmix64(s);
    return first ^ splitmix64(s);
}

// mt19937_64 engine with hand-rolled variate transforms. The standard
// distribution objects are implementation-defined, so traces produced through
// them would not be reproducible across standard libraries; these transforms
// are fully specified.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1].
    double uniform01_open_low() { return 1.0 - uniform01(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive integer range via rejection sampling (no modulo bias).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(engine_()); // full range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    double exponential(double rate) {
        return -std::log1p(-uniform01()) / rate;
    }

    double normal(double mean = 0.0, double stdev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stdev * spare_;
        }
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + stdev * r * std::cos(theta);
    }

    // Fisher-Yates; std::shuffle is implementation-defined so not used here.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace vtwin
