#pragma once

#include <array>
#include <cstdint>

namespace delaysa {

// What a random stream is used for. Each (seed, run, purpose) triple names an
// independent Philox4x32-10 stream: the 64-bit seed is the key, the counter is
// (block_lo, block_hi, purpose, run).
enum class Purpose : std::uint32_t {
    Path = 1,
    Reward = 2,
    Delay = 3,
    Start = 4,
    Output = 5,
    Recipe = 6,
    Probe = 7,
    Grid = 8,
    Test = 9,
};

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t run, Purpose purpose);
    Stream(std::uint64_t seed, std::uint64_t run, std::uint32_t purpose);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform integer on [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    // Standard normal via Box-Muller.
    double normal();

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Raw block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

}  // namespace delaysa
