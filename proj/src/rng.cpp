#include "fkq/rng.hpp"

namespace fkq {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)}
{
}

Philox4x32::ctr_type Philox4x32::block(ctr_type ctr, key_type key)
{
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, ctr[0], hi0, lo0);
        mulhilo(kM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

void Philox4x32::refill()
{
    buf_ = block(ctr_, key_);
    if (++ctr_[0] == 0)
        ++ctr_[1];
    pos_ = 0;
}

Philox4x32::result_type Philox4x32::operator()()
{
    if (pos_ == 4)
        refill();
    return buf_[pos_++];
}

void Philox4x32::discard(unsigned long long z)
{
    while (z > 0) {
        (*this)();
        --z;
    }
}

double Rng::uniform()
{
    const std::uint64_t hi = eng_() >> 5;  // 27 bits
    const std::uint64_t lo = eng_() >> 6;  // 26 bits
    const double u = (static_cast<double>(hi * 67108864ull + lo) + 0.5) / 9007199254740992.0;
    return u;
}

} // namespace fkq
