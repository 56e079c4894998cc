#include "survtest/rng.hpp"

#include "survtest/format.hpp"

namespace survtest {

namespace {
__extension__ typedef unsigned __int128 uint128;
}  // namespace

std::uint64_t RandomStream::below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next_u64();
    uint128 m = static_cast<uint128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<uint128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) noexcept {
    std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t c : coords) h = mix64(h ^ mix64(c + 0x9e3779b97f4a7c15ULL));
    return h;
}

std::uint64_t hash_label(std::string_view label) noexcept { return fnv1a(label); }

}  // namespace survtest
