#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ladder/random.hpp"

using ladder::Rng;

TEST_SUITE("random") {

TEST_CASE("identical seeds give identical streams") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("gaussian with sigma 0 is all zeros") {
    Rng rng(1);
    auto t = ladder::gaussian<double>(rng, 3, 4, 0.0);
    for (ladder::index_t i = 0; i < t.size(); ++i) CHECK(t.data()[i] == 0.0);
}

TEST_CASE("gaussian rejects negative sigma") {
    Rng rng(1);
    CHECK_THROWS_AS(ladder::gaussian<double>(rng, 2, 2, -0.1), ladder::value_error);
}

TEST_CASE("same seed produces identical tensors") {
    Rng a(99), b(99);
    auto ta = ladder::gaussian<double>(a, 8, 8, 0.3);
    auto tb = ladder::gaussian<double>(b, 8, 8, 0.3);
    CHECK(ta == tb);
}

TEST_CASE("gaussian scales exactly with sigma") {
    Rng a(7), b(7);
    auto unit = ladder::gaussian<double>(a, 16, 16, 1.0);
    auto scaled = ladder::gaussian<double>(b, 16, 16, 2.5);
    for (ladder::index_t i = 0; i < unit.size(); ++i)
        CHECK(scaled.data()[i] == 2.5 * unit.data()[i]);
}

TEST_CASE("empirical stdev of a million draws at sigma 0.3") {
    Rng rng(2026);
    auto t = ladder::gaussian<double>(rng, 1000, 1000, 0.3);
    double mean = 0;
    for (ladder::index_t i = 0; i < t.size(); ++i) mean += t.data()[i];
    mean /= static_cast<double>(t.size());
    double ss = 0;
    for (ladder::index_t i = 0; i < t.size(); ++i) {
        const double c = t.data()[i] - mean;
        ss += c * c;
    }
    const double stdev = std::sqrt(ss / static_cast<double>(t.size()));
    CHECK(stdev >= 0.299);
    CHECK(stdev <= 0.301);
}

TEST_CASE("split streams differ from the parent and from each other") {
    Rng base(42);
    Rng s1 = base.split(1);
    Rng s2 = base.split(2);
    CHECK(s1.next_u64() != s2.next_u64());
    // Splitting leaves the parent untouched.
    Rng fresh(42);
    CHECK(base.next_u64() == fresh.next_u64());
}

TEST_CASE("permutation covers every index once") {
    Rng rng(9);
    auto p = ladder::permutation(rng, 257);
    auto sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (ladder::index_t i = 0; i < 257; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("state round trip reproduces the stream") {
    Rng rng(5);
    rng.next_u64();
    const auto snap = rng.state();
    const auto expect = rng.next_u64();
    Rng other(5);
    other.set_state(snap);
    CHECK(other.next_u64() == expect);
}

} // TEST_SUITE
