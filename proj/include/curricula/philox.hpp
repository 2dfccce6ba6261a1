#pragma once

// Counter-based random numbers (Philox4x64, 10 rounds). Every draw is a pure
// function of (seed, stream, substream, draw index), so parallel sweeps can
// hand out independent streams without shared state. Block outputs match the
// reference implementation used by numpy.random.Philox; see the test vectors.

#include <array>
#include <cmath>
#include <cstdint>

namespace curricula {

struct Philox4x64 {
    static constexpr uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
    static constexpr uint64_t kM1 = 0xCA5A826395121157ULL;
    static constexpr uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
    static constexpr uint64_t kW1 = 0xBB67AE8584CAA73BULL;

    static std::array<uint64_t, 4> block(std::array<uint64_t, 4> ctr, std::array<uint64_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * ctr[2];
            const uint64_t lo0 = static_cast<uint64_t>(p0), hi0 = static_cast<uint64_t>(p0 >> 64);
            const uint64_t lo1 = static_cast<uint64_t>(p1), hi1 = static_cast<uint64_t>(p1 >> 64);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

// Named streams hanging off one seed.
enum class Stream : uint64_t {
    Dataset = 0,
    Init = 1,
    Test = 2,
    Teacher = 3,
    Shuffle = 4,
};

class RandomStream {
public:
    RandomStream(uint64_t seed, Stream stream, uint64_t substream = 0)
        : key_{seed, 0x853C49E6748FEA9BULL}, base_{0, 0, substream, static_cast<uint64_t>(stream)} {}

    uint64_t next_u64() {
        if (pos_ == 4) {
            buf_ = Philox4x64::block(base_, key_);
            if (++base_[0] == 0) ++base_[1];
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925287 * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // Rejection-free would bias; bound the bias away with rejection.
        const uint64_t limit = n * (UINT64_MAX / n);
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

private:
    std::array<uint64_t, 2> key_;
    std::array<uint64_t, 4> base_;
    std::array<uint64_t, 4> buf_{};
    int pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace curricula
