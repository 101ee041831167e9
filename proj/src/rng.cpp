#include "trialpower/rng.hpp"

#include "trialpower/distributions.hpp"

namespace trialpower {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint64_t w) {
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

CounterStream::CounterStream(std::uint64_t master_seed, std::uint32_t replicate,
                             std::uint32_t subject, StreamPurpose purpose)
    : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
      replicate_(replicate),
      subject_(subject),
      purpose_(static_cast<std::uint32_t>(purpose)) {}

std::uint64_t CounterStream::word(std::uint32_t index) const {
    const auto out = Philox4x32::generate({index >> 1, subject_, replicate_, purpose_}, key_);
    const std::size_t i = (index & 1u) * 2;
    return (static_cast<std::uint64_t>(out[i]) << 32) | out[i + 1];
}

double CounterStream::uniform(std::uint32_t index) const { return to_open_unit(word(index)); }

double CounterStream::normal(std::uint32_t index) const {
    return normal_quantile(uniform(index));
}

std::uint64_t CounterStream::next_word() { return word(position_++); }

double CounterStream::next_uniform() { return to_open_unit(next_word()); }

__extension__ using uint128 = unsigned __int128;

std::uint64_t CounterStream::next_below(std::uint64_t bound) {
    // Lemire's multiply-shift with rejection.
    uint128 m = static_cast<uint128>(next_word()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<uint128>(next_word()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace trialpower
