#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace survtest {

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream: output k is mix64(seed + k * golden). A stream is
/// fully described by its seed and position, so replications never share state.
class RandomStream {
public:
    explicit constexpr RandomStream(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next_u64() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform on the open interval (0, 1).
    constexpr double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) noexcept;

private:
    std::uint64_t state_;
};

/// Seed for a cell/replication coordinate tuple under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) noexcept;

std::uint64_t hash_label(std::string_view label) noexcept;

}  // namespace survtest
