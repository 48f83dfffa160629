#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace fkq {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// The key is the user seed; the high counter words carry the stream index,
/// so (seed, stream) pairs give independent, reproducible sequences.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using ctr_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();
    void discard(unsigned long long z);

    /// One block of the raw bijection.
    static ctr_type block(ctr_type ctr, key_type key);

private:
    void refill();

    key_type key_;
    ctr_type ctr_;
    ctr_type buf_{};
    int pos_ = 4;
};

/// Engine plus the distributions used by the simulators.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream) : eng_(seed, stream) {}

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    double normal() { return normal_(eng_); }

    Philox4x32& engine() { return eng_; }

private:
    Philox4x32 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace fkq
