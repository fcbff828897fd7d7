#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

namespace detail {

// splitmix64 finalizer. Full avalanche, stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Small splittable counter-based generator. The state is a 64-bit counter;
/// each draw advances it by a fixed odd constant and hashes it, so identical
/// seeds give identical streams on every platform. split(stream) derives an
/// independent stream from the seed, leaving this generator untouched.
/// Single consumer; never share one instance across concurrent users.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), counter_(detail::mix64(seed)) {}

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return detail::mix64(counter_);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw value_error("Rng::next_below: zero bound");
        // 128-bit multiply-shift map; bias is < 2^-64 * bound, irrelevant here.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    /// Standard normal via Box-Muller. Consumes two draws per call.
    double next_normal() {
        const double u1 = 1.0 - next_double(); // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent stream keyed by (seed, stream id).
    Rng split(std::uint64_t stream) const {
        return Rng(detail::mix64(seed_ ^ detail::mix64(stream)));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t state() const { return counter_; }
    void set_state(std::uint64_t s) { counter_ = s; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

/// i.i.d. draws from N(0, sigma^2); sigma = 0 yields all zeros. Drawn in
/// row-major order; gaussian(rng, r, c, s) equals s * gaussian(rng, r, c, 1)
/// for the same starting state.
template <typename S>
Tensor<S> gaussian(Rng& rng, index_t rows, index_t cols, S sigma) {
    if (sigma < S(0))
        throw value_error("gaussian: negative sigma");
    Tensor<S> t(rows, cols);
    for (index_t i = 0; i < t.size(); ++i)
        t.data()[i] = sigma * static_cast<S>(rng.next_normal());
    return t;
}

/// Seed-deterministic Fisher-Yates permutation of 0..n-1.
inline std::vector<index_t> permutation(Rng& rng, index_t n) {
    std::vector<index_t> p(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (index_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
}

} // namespace ladder
