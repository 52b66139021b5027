#pragma once

#include <cstdint>

namespace isingdyn {

// Counter-based generator (splitmix64 core). A stream is identified by its
// key; output t is mix64(key + (t+1)*gamma). derive() builds a child key as a
// pure function of (parent key, salt), so a layout like
// master.derive(beta_bits).derive(m).derive(trial) reproduces exactly no
// matter how trials are scheduled across threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : key_(seed), state_(seed) {}

    RngStream derive(std::uint64_t salt) const {
        return RngStream(mix64(key_ + kGamma * (mix64(salt + kGamma) | 1ull)));
    }
    RngStream derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }
    RngStream derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
        return derive(a).derive(b).derive(c);
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix64(state_);
    }

    // Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0,n). Modulo bias is below n / 2^64 and exactly zero for
    // power-of-two n.
    int next_index(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

    bool next_bernoulli(double p) { return next_double() < p; }

    std::uint64_t key() const { return key_; }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t state_;
};

}  // namespace isingdyn
