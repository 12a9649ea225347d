#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>

namespace fracreg {

namespace detail {

/// SplitMix64 finalizer, used to derive well-separated substream keys.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Philox4x32-10 counter-based generator. The output is a pure function of
/// (key, counter), so streams can be replayed and split without shared state.
class Philox4x32 {
public:
    explicit Philox4x32(std::uint64_t key, std::uint64_t counter = 0)
        : key_lo_(static_cast<std::uint32_t>(key)),
          key_hi_(static_cast<std::uint32_t>(key >> 32)),
          counter_(counter),
          cursor_(4) {}

    std::uint64_t key() const {
        return (static_cast<std::uint64_t>(key_hi_) << 32) | key_lo_;
    }
    std::uint64_t counter() const { return counter_; }

    std::uint32_t next_u32() {
        if (cursor_ == 4) {
            block_ = round10(counter_++);
            cursor_ = 0;
        }
        return block_[cursor_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform on [0,1) with 53-bit resolution.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0,1]; safe as a logarithm argument.
    double next_uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xd2511f53u;
    static constexpr std::uint32_t kMul1 = 0xcd9e8d57u;
    static constexpr std::uint32_t kWeyl0 = 0x9e3779b9u;
    static constexpr std::uint32_t kWeyl1 = 0xbb67ae85u;

    std::array<std::uint32_t, 4> round10(std::uint64_t ctr) const {
        std::uint32_t c0 = static_cast<std::uint32_t>(ctr);
        std::uint32_t c1 = static_cast<std::uint32_t>(ctr >> 32);
        std::uint32_t c2 = 0, c3 = 0;
        std::uint32_t k0 = key_lo_, k1 = key_hi_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
            const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
            const std::uint32_t n1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
            const std::uint32_t n3 = static_cast<std::uint32_t>(p0);
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += kWeyl0; k1 += kWeyl1;
        }
        return {c0, c1, c2, c3};
    }

    std::uint32_t key_lo_, key_hi_;
    std::uint64_t counter_;
    std::array<std::uint32_t, 4> block_{};
    int cursor_;
};

/// Standard normal stream: Box-Muller on top of Philox uniforms. Chosen over
/// std::normal_distribution because the transform is fully specified, so the
/// same seed yields the same path on every platform.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t key, std::uint64_t counter = 0)
        : uniforms_(key, counter) {}

    std::uint64_t key() const { return uniforms_.key(); }
    std::uint64_t counter() const { return uniforms_.counter(); }

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniforms_.next_uniform_open();
        const double u2 = uniforms_.next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    void fill(std::span<double> out) {
        for (double& v : out) v = next();
    }

private:
    Philox4x32 uniforms_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Roles keep the streams that feed one replicate statistically unrelated:
/// the regressor path, the error path, and any auxiliary draws.
enum class StreamRole : std::uint64_t { path1 = 1, path2 = 2, latent = 3 };

/// Folds a salt (for example a grid size) into a master seed.
inline std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t salt) {
    return detail::splitmix64(master_seed ^ detail::splitmix64(salt + 0x6a09e667f3bcc909ULL));
}

/// Derives the generator for (replicate, role) under a master seed. Distinct
/// inputs map to distinct Philox keys, giving independent substreams that can
/// be handed to concurrent workers.
inline GaussianStream seeded_substream(std::uint64_t master_seed,
                                       std::uint64_t replicate,
                                       StreamRole role) {
    std::uint64_t key = detail::splitmix64(master_seed);
    key = detail::splitmix64(key ^ (0x9e3779b97f4a7c15ULL * (replicate + 1)));
    key = detail::splitmix64(key ^ (static_cast<std::uint64_t>(role) << 56));
    return GaussianStream(key);
}

} // namespace fracreg
