#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace taug {

// Seedable, splittable random stream (xoshiro256++ core).
//
// split() derives an independent child from the parent's creation key only,
// never from its consumption state, so streams can be laid out by name/index
// up front and stay reproducible regardless of draw interleaving.
class RngStream {
public:
    RngStream() { init(0); }

    static RngStream from_seed(std::uint64_t seed) {
        RngStream r;
        r.init(seed);
        return r;
    }

    RngStream split(std::uint64_t salt) const {
        std::uint64_t x = key_ + 0x9e3779b97f4a7c15ULL * (salt + 0x632be59bd9b4e019ULL);
        std::uint64_t a = splitmix64(x);
        std::uint64_t b = splitmix64(x);
        return from_seed(a ^ (b << 1) ^ (b >> 63));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n >= 1. Masked rejection keeps it unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;) {
            const std::uint64_t x = next_u64() & mask;
            if (x < n) return x;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller; two uniforms per draw, no cached spare,
    // so the stream state stays trivially serializable.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    void fill_normal(std::span<double> out) {
        for (auto& v : out) v = normal();
    }

    void fill_uniform(std::span<double> out) {
        for (auto& v : out) v = uniform();
    }

    // Logistic(0,1) sample, L = log U - log(1-U).
    double logistic() {
        const double u = 1.0 - uniform();  // (0, 1], keeps both logs finite
        return std::log(u) - std::log1p(-u);
    }

    std::array<std::uint64_t, 5> state() const { return {key_, s_[0], s_[1], s_[2], s_[3]}; }

    static RngStream from_state(const std::array<std::uint64_t, 5>& st) {
        RngStream r;
        r.key_ = st[0];
        r.s_ = {st[1], st[2], st[3], st[4]};
        return r;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    void init(std::uint64_t seed) {
        key_ = seed;
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
    }

    std::uint64_t key_ = 0;
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace taug
