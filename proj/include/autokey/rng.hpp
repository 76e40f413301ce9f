#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "autokey/common.hpp"

namespace autokey {

/// Seeded ChaCha20 keystream generator.
///
/// Output depends only on (seed, stream label) and the sequence of draws, so
/// every party and the network get independent but reproducible streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::string_view stream = {});

    void fill(std::span<std::uint8_t> out);
    Bytes bytes(std::size_t n);

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    // Uniform in [0, bound), rejection-sampled.
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t blocks_drawn() const noexcept { return counter_; }

private:
    void refill();

    std::array<std::uint8_t, 32> key_{};
    std::array<std::uint8_t, 64> block_{};
    std::uint64_t counter_ = 0;
    std::size_t pos_ = 64;
};

}  // namespace autokey
