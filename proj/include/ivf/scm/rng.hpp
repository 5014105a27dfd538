#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace ivf::scm {

/// Generator identity recorded in reports and exports.
inline constexpr std::string_view kRngName = "philox4x32-10/v1";

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al. 2011).
Counter philox4x32_10(Counter ctr, Key key);

/// Random stream addressed by (seed, row, node, stream). Blocks are consumed
/// in order; every address yields an independent sequence, so results do not
/// depend on evaluation order or thread layout.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t row, std::uint32_t node, std::uint32_t stream);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Standard normal via Box-Muller.
    double normal();

private:
    Counter ctr_;
    Key key_;
    Counter buf_{};
    int used_ = 4;
    std::uint32_t block_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Seed for sub-run `index` derived from a base seed (Monte Carlo repetitions).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

} // namespace ivf::scm
