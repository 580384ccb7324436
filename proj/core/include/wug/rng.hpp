#ifndef WUG_RNG_HPP
#define WUG_RNG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace wug {

// Splittable 64-bit generator (splitmix64). Every randomized stage of the
// pipeline draws from this generator so runs are reproducible across
// platforms; "splitmix64" is the PRNG id recorded in output metadata.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Child generator with a decorrelated stream.
    SplitMix64 split() { return SplitMix64(next()); }

    // Uniform in [0, bound) without modulo bias for the bounds we use.
    std::uint64_t below(std::uint64_t bound) {
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static constexpr const char* id() { return "splitmix64"; }

private:
    std::uint64_t state_;
};

// FNV-1a, used for data-manifest hashes in checkpoints and reports.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(s.data(), s.size(), h);
}

// Keeps string literals away from the (pointer, byte count) overload.
inline std::uint64_t fnv1a(const char* s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    std::size_t n = 0;
    while (s[n]) ++n;
    return fnv1a(s, n, h);
}

} // namespace wug

#endif
