#include "ivf/scm/rng.hpp"

#include <cmath>
#include <numbers>

namespace ivf::scm {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53;
constexpr std::uint32_t kM1 = 0xCD9E8D57;
constexpr std::uint32_t kW0 = 0x9E3779B9;
constexpr std::uint32_t kW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = std::uint64_t{a} * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// stream word: low byte is the stream id, the rest counts blocks
constexpr std::uint32_t kBlockShift = 8;

} // namespace

Counter philox4x32_10(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, ctr[0], hi0, lo0);
        mulhilo(kM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

Stream::Stream(std::uint64_t seed, std::uint64_t row, std::uint32_t node, std::uint32_t stream)
    : ctr_{static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(row >> 32), node, stream & 0xFFu},
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

std::uint32_t Stream::next_u32() {
    if (used_ == 4) {
        Counter c = ctr_;
        c[3] |= block_++ << kBlockShift;
        buf_ = philox4x32_10(c, key_);
        used_ = 0;
    }
    return buf_[used_++];
}

std::uint64_t Stream::next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double Stream::uniform() {
    // (k + 0.5) / 2^53 never hits 0 or 1
    const std::uint64_t k = next_u64() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    const Counter c = philox4x32_10(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0xFFFFFFFFu, 0xFFFFFFFFu},
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return (std::uint64_t{c[0]} << 32) | c[1];
}

} // namespace ivf::scm
