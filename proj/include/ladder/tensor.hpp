#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "ladder/errors.hpp"

namespace ladder {

using index_t = std::int64_t;

/// Dense row-major 2-D array. Rows are samples, columns are features.
/// Values are owned; copies are deep. Scalar is float or double.
template <typename S>
class Tensor {
public:
    Tensor() = default;

    Tensor(index_t rows, index_t cols) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0)
            throw shape_error("Tensor: negative dimensions " + shape_str(rows, cols));
        data_.assign(static_cast<std::size_t>(rows * cols), S(0));
    }

    static Tensor zeros(index_t rows, index_t cols) { return Tensor(rows, cols); }

    static Tensor full(index_t rows, index_t cols, S value) {
        Tensor t(rows, cols);
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    static Tensor identity(index_t n) {
        Tensor t(n, n);
        for (index_t i = 0; i < n; ++i) t(i, i) = S(1);
        return t;
    }

    static Tensor from_rows(std::initializer_list<std::initializer_list<S>> rows) {
        const index_t r = static_cast<index_t>(rows.size());
        const index_t c = r > 0 ? static_cast<index_t>(rows.begin()->size()) : 0;
        Tensor t(r, c);
        index_t i = 0;
        for (const auto& row : rows) {
            if (static_cast<index_t>(row.size()) != c)
                throw shape_error("Tensor::from_rows: ragged rows");
            index_t j = 0;
            for (S v : row) t(i, j++) = v;
            ++i;
        }
        return t;
    }

    index_t rows() const { return rows_; }
    index_t cols() const { return cols_; }
    index_t size() const { return rows_ * cols_; }
    bool empty() const { return data_.empty(); }

    S* data() { return data_.data(); }
    const S* data() const { return data_.data(); }

    S& operator()(index_t i, index_t j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
    S operator()(index_t i, index_t j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }

    S* row(index_t i) { return data_.data() + i * cols_; }
    const S* row(index_t i) const { return data_.data() + i * cols_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Tensor& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    std::string shape() const { return shape_str(rows_, cols_); }

    static std::string shape_str(index_t r, index_t c) {
        return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
    }

private:
    index_t rows_ = 0;
    index_t cols_ = 0;
    std::vector<S> data_;
};

namespace detail {

template <typename S>
using EigenMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
Eigen::Map<const EigenMatrix<S>> as_eigen(const Tensor<S>& t) {
    return {t.data(), t.rows(), t.cols()};
}

template <typename S>
Eigen::Map<EigenMatrix<S>> as_eigen(Tensor<S>& t) {
    return {t.data(), t.rows(), t.cols()};
}

} // namespace detail

inline void check_same_shape(index_t ar, index_t ac, index_t br, index_t bc, const char* op) {
    if (ar != br || ac != bc)
        throw shape_error(std::string(op) + ": shape mismatch " + Tensor<double>::shape_str(ar, ac) +
                          " vs " + Tensor<double>::shape_str(br, bc));
}

/// a[m x k] * b[k x n] -> [m x n]
template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.cols() != b.rows())
        throw shape_error("matmul: inner dimensions disagree " + a.shape() + " vs " + b.shape());
    Tensor<S> out(a.rows(), b.cols());
    detail::as_eigen(out).noalias() = detail::as_eigen(a) * detail::as_eigen(b);
    return out;
}

/// a^T[k x m] * b[k x n] -> [m x n]; a passed untransposed as [k x m].
template <typename S>
Tensor<S> matmul_transpose_a(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.rows() != b.rows())
        throw shape_error("matmul_transpose_a: row counts disagree " + a.shape() + " vs " + b.shape());
    Tensor<S> out(a.cols(), b.cols());
    detail::as_eigen(out).noalias() = detail::as_eigen(a).transpose() * detail::as_eigen(b);
    return out;
}

/// a[m x k] * b^T[k x n] -> [m x n]; b passed untransposed as [n x k].
template <typename S>
Tensor<S> matmul_transpose_b(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.cols() != b.cols())
        throw shape_error("matmul_transpose_b: column counts disagree " + a.shape() + " vs " + b.shape());
    Tensor<S> out(a.rows(), b.rows());
    detail::as_eigen(out).noalias() = detail::as_eigen(a) * detail::as_eigen(b).transpose();
    return out;
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "add");
    Tensor<S> out(a.rows(), a.cols());
    for (index_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

template <typename S>
void add_inplace(Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "add_inplace");
    for (index_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "sub");
    Tensor<S> out(a.rows(), a.cols());
    for (index_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    return out;
}

template <typename S>
Tensor<S> hadamard(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "hadamard");
    Tensor<S> out(a.rows(), a.cols());
    for (index_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S k) {
    Tensor<S> out(a.rows(), a.cols());
    for (index_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * k;
    return out;
}

/// Adds the 1 x d row vector v to every row of a [b x d].
template <typename S>
Tensor<S> add_row_vector(const Tensor<S>& a, const Tensor<S>& v) {
    if (v.rows() != 1 || v.cols() != a.cols())
        throw shape_error("add_row_vector: expected 1x" + std::to_string(a.cols()) + ", got " + v.shape());
    Tensor<S> out(a.rows(), a.cols());
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j)
            out(i, j) = a(i, j) + v(0, j);
    return out;
}

/// Multiplies every row of a [b x d] elementwise by the 1 x d row vector v.
template <typename S>
Tensor<S> mul_row_vector(const Tensor<S>& a, const Tensor<S>& v) {
    if (v.rows() != 1 || v.cols() != a.cols())
        throw shape_error("mul_row_vector: expected 1x" + std::to_string(a.cols()) + ", got " + v.shape());
    Tensor<S> out(a.rows(), a.cols());
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j)
            out(i, j) = a(i, j) * v(0, j);
    return out;
}

/// Column sums as a 1 x d row vector.
template <typename S>
Tensor<S> col_sum(const Tensor<S>& a) {
    Tensor<S> out(1, a.cols());
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j)
            out(0, j) += a(i, j);
    return out;
}

/// Per-column sample mean and biased variance (divide by the row count).
template <typename S>
std::pair<Tensor<S>, Tensor<S>> col_mean_var(const Tensor<S>& x) {
    if (x.rows() < 1)
        throw shape_error("col_mean_var: empty tensor " + x.shape());
    const index_t b = x.rows(), d = x.cols();
    Tensor<S> mean(1, d), var(1, d);
    for (index_t i = 0; i < b; ++i)
        for (index_t j = 0; j < d; ++j)
            mean(0, j) += x(i, j);
    for (index_t j = 0; j < d; ++j) mean(0, j) /= static_cast<S>(b);
    for (index_t i = 0; i < b; ++i)
        for (index_t j = 0; j < d; ++j) {
            const S c = x(i, j) - mean(0, j);
            var(0, j) += c * c;
        }
    for (index_t j = 0; j < d; ++j) var(0, j) /= static_cast<S>(b);
    return {std::move(mean), std::move(var)};
}

template <typename S>
S sum(const Tensor<S>& a) {
    S acc = 0;
    for (index_t i = 0; i < a.size(); ++i) acc += a.data()[i];
    return acc;
}

template <typename S>
bool all_finite(const Tensor<S>& a) {
    for (index_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a.data()[i])) return false;
    return true;
}

template <typename S>
void ensure_finite(const Tensor<S>& a, const std::string& context) {
    if (!all_finite(a))
        throw numeric_error("non-finite values in " + context);
}

} // namespace ladder
