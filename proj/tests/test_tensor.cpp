#include <doctest.h>

#include "ladder/random.hpp"
#include "ladder/tensor.hpp"

using ladder::Tensor;

TEST_SUITE("tensor") {

TEST_CASE("matmul identity") {
    auto a = Tensor<double>::from_rows({{1, 2}, {3, 4}});
    auto r = matmul(Tensor<double>::identity(2), a);
    CHECK(r == a);
}

TEST_CASE("matmul zero") {
    auto a = Tensor<double>::from_rows({{1, 2}, {3, 4}});
    auto z = Tensor<double>::zeros(2, 1);
    auto r = matmul(a, z);
    CHECK(r(0, 0) == 0.0);
    CHECK(r(1, 0) == 0.0);
}

TEST_CASE("matmul 2x2 hand computation") {
    auto a = Tensor<double>::from_rows({{1, 2}, {3, 4}});
    auto b = Tensor<double>::from_rows({{5}, {6}});
    auto r = matmul(a, b);
    CHECK(r(0, 0) == doctest::Approx(17).epsilon(1e-15));
    CHECK(r(1, 0) == doctest::Approx(39).epsilon(1e-15));
}

TEST_CASE("matmul shape error names both shapes") {
    auto a = Tensor<double>(2, 3);
    auto b = Tensor<double>(2, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), ladder::shape_error);
}

TEST_CASE("matmul associativity on random tensors") {
    ladder::Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        auto a = ladder::gaussian<double>(rng, 4, 6, 1.0);
        auto b = ladder::gaussian<double>(rng, 6, 3, 1.0);
        auto c = ladder::gaussian<double>(rng, 3, 5, 1.0);
        auto left = matmul(matmul(a, b), c);
        auto right = matmul(a, matmul(b, c));
        for (ladder::index_t i = 0; i < left.size(); ++i) {
            const double denom = std::abs(right.data()[i]) + 1e-12;
            CHECK(std::abs(left.data()[i] - right.data()[i]) / denom < 1e-9);
        }
    }
}

TEST_CASE("transpose products agree with explicit transposition") {
    ladder::Rng rng(5);
    auto a = ladder::gaussian<double>(rng, 4, 3, 1.0);
    auto b = ladder::gaussian<double>(rng, 4, 2, 1.0);
    auto at = Tensor<double>(3, 4);
    for (ladder::index_t i = 0; i < 4; ++i)
        for (ladder::index_t j = 0; j < 3; ++j) at(j, i) = a(i, j);
    CHECK(matmul_transpose_a(a, b) == matmul(at, b));

    auto c = ladder::gaussian<double>(rng, 2, 3, 1.0);
    auto ct = Tensor<double>(3, 2);
    for (ladder::index_t i = 0; i < 2; ++i)
        for (ladder::index_t j = 0; j < 3; ++j) ct(j, i) = c(i, j);
    CHECK(matmul_transpose_b(a, c) == matmul(a, ct));
}

TEST_CASE("col_mean_var two-point analytic") {
    auto x = Tensor<double>::from_rows({{0}, {2}});
    auto [mean, var] = col_mean_var(x);
    CHECK(mean(0, 0) == 1.0);
    CHECK(var(0, 0) == 1.0);
}

TEST_CASE("col_mean_var constant column") {
    auto x = Tensor<double>::from_rows({{5}, {5}, {5}});
    auto [mean, var] = col_mean_var(x);
    CHECK(mean(0, 0) == 5.0);
    CHECK(var(0, 0) == 0.0);
}

TEST_CASE("col_mean_var two columns") {
    auto x = Tensor<double>::from_rows({{1, 10}, {3, 10}});
    auto [mean, var] = col_mean_var(x);
    CHECK(mean(0, 0) == 2.0);
    CHECK(mean(0, 1) == 10.0);
    CHECK(var(0, 0) == 1.0);
    CHECK(var(0, 1) == 0.0);
}

TEST_CASE("col_mean_var rejects empty input") {
    Tensor<double> empty(0, 3);
    CHECK_THROWS_AS(col_mean_var(empty), ladder::shape_error);
}

TEST_CASE("col_mean_var of mean-subtracted data is zero-mean") {
    ladder::Rng rng(3);
    auto x = ladder::gaussian<double>(rng, 50, 7, 2.0);
    auto [mean, var] = col_mean_var(x);
    auto centered = x;
    for (ladder::index_t i = 0; i < x.rows(); ++i)
        for (ladder::index_t j = 0; j < x.cols(); ++j) centered(i, j) -= mean(0, j);
    auto [mean2, var2] = col_mean_var(centered);
    for (ladder::index_t j = 0; j < x.cols(); ++j) CHECK(std::abs(mean2(0, j)) < 1e-12);
}

} // TEST_SUITE
