#pragma once

#include <array>
#include <cstdint>

namespace trialpower {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3").
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key);
};

/// Purpose tags keep independent uses of one (seed, replicate, subject)
/// triple from overlapping.
enum class StreamPurpose : std::uint32_t {
    subject = 0,
    resample = 1,
    po_reference = 2,
    entry = 3,
};

/// Uniform stream addressed by (master seed, replicate, subject, purpose).
/// Each draw is a pure function of its address and index, so results do not
/// depend on which thread generates them or in what order.
class CounterStream {
public:
    CounterStream(std::uint64_t master_seed, std::uint32_t replicate, std::uint32_t subject,
                  StreamPurpose purpose = StreamPurpose::subject);

    /// Draw number `index` of this stream, in the open interval (0, 1).
    double uniform(std::uint32_t index) const;

    /// Standard normal by inverse-CDF of uniform(index).
    double normal(std::uint32_t index) const;

    /// Sequential access; starts at index 0.
    double next_uniform();

    /// Unbiased integer in [0, bound), bound > 0.
    std::uint64_t next_below(std::uint64_t bound);

private:
    std::uint64_t word(std::uint32_t index) const;
    std::uint64_t next_word();

    Philox4x32::Key key_;
    std::uint32_t replicate_;
    std::uint32_t subject_;
    std::uint32_t purpose_;
    std::uint32_t position_ = 0;
};

}  // namespace trialpower
