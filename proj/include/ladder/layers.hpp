#pragma once

#include <cmath>
#include <tuple>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

enum class Mode { training, inference };

/// Per-feature batch normalization state. Training mode normalizes with
/// minibatch statistics and folds them into the running estimates; inference
/// mode normalizes with the running estimates only and never mutates.
template <typename S>
struct BatchNormState {
    S epsilon = S(1e-5);
    S momentum = S(0.99); // fraction of the old running estimate kept per update
    Tensor<S> running_mean; // 1 x d
    Tensor<S> running_var;  // 1 x d, entries >= 0
    Mode mode = Mode::training;

    explicit BatchNormState(index_t d = 0)
        : running_mean(1, d), running_var(Tensor<S>::full(1, d, S(1))) {}
};

/// Everything the batch-norm backward pass needs from one forward call.
template <typename S>
struct BnCache {
    Tensor<S> centered;   // x - mean, b x d
    Tensor<S> inv_std;    // 1 / sqrt(var + eps), 1 x d
    Tensor<S> normalized; // z, b x d
};

/// z = (x - mu) / sqrt(var + eps) per column. Training mode uses minibatch
/// statistics (biased variance) and updates the running estimates; inference
/// mode uses the running estimates. Training needs at least two rows.
template <typename S>
std::pair<Tensor<S>, BnCache<S>> batchnorm_forward(const Tensor<S>& x, BatchNormState<S>& state) {
    const index_t b = x.rows(), d = x.cols();
    if (state.running_mean.cols() != d)
        throw shape_error("batchnorm_forward: state width " + state.running_mean.shape() +
                          " does not match input " + x.shape());
    Tensor<S> z(b, d);
    BnCache<S> cache;

    if (state.mode == Mode::inference) {
        for (index_t i = 0; i < b; ++i)
            for (index_t j = 0; j < d; ++j)
                z(i, j) = (x(i, j) - state.running_mean(0, j)) /
                          std::sqrt(state.running_var(0, j) + state.epsilon);
        return {std::move(z), std::move(cache)};
    }

    if (b < 2)
        throw value_error("batchnorm_forward: training mode needs a batch of >= 2, got " +
                          std::to_string(b));

    auto [mean, var] = col_mean_var(x);
    Tensor<S> inv_std(1, d);
    for (index_t j = 0; j < d; ++j)
        inv_std(0, j) = S(1) / std::sqrt(var(0, j) + state.epsilon);

    Tensor<S> centered(b, d);
    for (index_t i = 0; i < b; ++i)
        for (index_t j = 0; j < d; ++j) {
            centered(i, j) = x(i, j) - mean(0, j);
            z(i, j) = centered(i, j) * inv_std(0, j);
        }

    for (index_t j = 0; j < d; ++j) {
        state.running_mean(0, j) = state.momentum * state.running_mean(0, j) +
                                   (S(1) - state.momentum) * mean(0, j);
        state.running_var(0, j) = state.momentum * state.running_var(0, j) +
                                  (S(1) - state.momentum) * var(0, j);
    }

    cache.centered = std::move(centered);
    cache.inv_std = std::move(inv_std);
    cache.normalized = z;
    return {std::move(z), std::move(cache)};
}

/// Exact gradient of the training-mode normalization w.r.t. x, including the
/// dependence of the minibatch mean and variance on x:
///   dx_k = inv_std * (g_k - mean_b(g) - z_k * mean_b(g . z))
template <typename S>
Tensor<S> batchnorm_backward(const Tensor<S>& grad_z, const BnCache<S>& cache) {
    const index_t b = grad_z.rows(), d = grad_z.cols();
    check_same_shape(b, d, cache.normalized.rows(), cache.normalized.cols(), "batchnorm_backward");

    Tensor<S> g_mean(1, d), gz_mean(1, d);
    for (index_t i = 0; i < b; ++i)
        for (index_t j = 0; j < d; ++j) {
            g_mean(0, j) += grad_z(i, j);
            gz_mean(0, j) += grad_z(i, j) * cache.normalized(i, j);
        }
    for (index_t j = 0; j < d; ++j) {
        g_mean(0, j) /= static_cast<S>(b);
        gz_mean(0, j) /= static_cast<S>(b);
    }

    Tensor<S> grad_x(b, d);
    for (index_t i = 0; i < b; ++i)
        for (index_t j = 0; j < d; ++j)
            grad_x(i, j) = cache.inv_std(0, j) *
                           (grad_z(i, j) - g_mean(0, j) - cache.normalized(i, j) * gz_mean(0, j));
    return grad_x;
}

/// a = gamma . (z + beta), per column.
template <typename S>
Tensor<S> scale_shift(const Tensor<S>& z, const Tensor<S>& gamma, const Tensor<S>& beta) {
    if (gamma.rows() != 1 || gamma.cols() != z.cols() || !gamma.same_shape(beta))
        throw shape_error("scale_shift: parameter shapes " + gamma.shape() + ", " + beta.shape() +
                          " do not fit input " + z.shape());
    Tensor<S> a(z.rows(), z.cols());
    for (index_t i = 0; i < z.rows(); ++i)
        for (index_t j = 0; j < z.cols(); ++j)
            a(i, j) = gamma(0, j) * (z(i, j) + beta(0, j));
    return a;
}

template <typename S>
struct ScaleShiftGrads {
    Tensor<S> grad_z;
    Tensor<S> grad_gamma; // 1 x d
    Tensor<S> grad_beta;  // 1 x d
};

template <typename S>
ScaleShiftGrads<S> scale_shift_backward(const Tensor<S>& grad_a, const Tensor<S>& z,
                                        const Tensor<S>& gamma, const Tensor<S>& beta) {
    check_same_shape(grad_a.rows(), grad_a.cols(), z.rows(), z.cols(), "scale_shift_backward");
    const index_t b = z.rows(), d = z.cols();
    ScaleShiftGrads<S> g;
    g.grad_z = Tensor<S>(b, d);
    g.grad_gamma = Tensor<S>(1, d);
    g.grad_beta = Tensor<S>(1, d);
    for (index_t i = 0; i < b; ++i)
        for (index_t j = 0; j < d; ++j) {
            g.grad_z(i, j) = grad_a(i, j) * gamma(0, j);
            g.grad_gamma(0, j) += grad_a(i, j) * (z(i, j) + beta(0, j));
            g.grad_beta(0, j) += grad_a(i, j) * gamma(0, j);
        }
    return g;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
    Tensor<S> h(a.rows(), a.cols());
    for (index_t i = 0; i < a.size(); ++i)
        h.data()[i] = a.data()[i] > S(0) ? a.data()[i] : S(0);
    return h;
}

/// Masks grad_h by the forward activation sign; the subgradient at 0 is 0.
template <typename S>
Tensor<S> relu_backward(const Tensor<S>& grad_h, const Tensor<S>& a) {
    check_same_shape(grad_h.rows(), grad_h.cols(), a.rows(), a.cols(), "relu_backward");
    Tensor<S> g(a.rows(), a.cols());
    for (index_t i = 0; i < a.size(); ++i)
        g.data()[i] = a.data()[i] > S(0) ? grad_h.data()[i] : S(0);
    return g;
}

/// h = max(0, gamma . (z + beta)).
template <typename S>
Tensor<S> scale_shift_relu(const Tensor<S>& z, const Tensor<S>& gamma, const Tensor<S>& beta) {
    return relu(scale_shift(z, gamma, beta));
}

template <typename S>
ScaleShiftGrads<S> scale_shift_relu_backward(const Tensor<S>& grad_h, const Tensor<S>& z,
                                             const Tensor<S>& gamma, const Tensor<S>& beta) {
    const Tensor<S> a = scale_shift(z, gamma, beta);
    return scale_shift_backward(relu_backward(grad_h, a), z, gamma, beta);
}

/// Row-wise softmax with max subtraction, so magnitudes up to ~1e3 are safe.
template <typename S>
Tensor<S> softmax(const Tensor<S>& z) {
    Tensor<S> p(z.rows(), z.cols());
    for (index_t i = 0; i < z.rows(); ++i) {
        S m = z(i, 0);
        for (index_t j = 1; j < z.cols(); ++j) m = std::max(m, z(i, j));
        S denom = 0;
        for (index_t j = 0; j < z.cols(); ++j) {
            p(i, j) = std::exp(z(i, j) - m);
            denom += p(i, j);
        }
        for (index_t j = 0; j < z.cols(); ++j) p(i, j) /= denom;
    }
    return p;
}

/// Average negative log probability of the target classes.
template <typename S>
S cross_entropy(const Tensor<S>& p, const std::vector<int>& targets) {
    if (static_cast<index_t>(targets.size()) != p.rows())
        throw shape_error("cross_entropy: " + std::to_string(targets.size()) + " labels for " +
                          p.shape() + " predictions");
    S acc = 0;
    for (index_t i = 0; i < p.rows(); ++i) {
        const int t = targets[static_cast<std::size_t>(i)];
        if (t < 0 || t >= p.cols())
            throw value_error("cross_entropy: label " + std::to_string(t) + " out of range [0, " +
                              std::to_string(p.cols()) + ")");
        acc -= std::log(p(i, t));
    }
    return acc / static_cast<S>(p.rows());
}

/// Gradient of cross_entropy(softmax(logits)) w.r.t. the logits:
/// (p - onehot(t)) / b. Fusing the two avoids dividing by tiny probabilities.
template <typename S>
Tensor<S> softmax_cross_entropy_grad(const Tensor<S>& p, const std::vector<int>& targets) {
    if (static_cast<index_t>(targets.size()) != p.rows())
        throw shape_error("softmax_cross_entropy_grad: " + std::to_string(targets.size()) +
                          " labels for " + p.shape() + " predictions");
    const S inv_b = S(1) / static_cast<S>(p.rows());
    Tensor<S> g(p.rows(), p.cols());
    for (index_t i = 0; i < p.rows(); ++i) {
        const int t = targets[static_cast<std::size_t>(i)];
        if (t < 0 || t >= p.cols())
            throw value_error("softmax_cross_entropy_grad: label " + std::to_string(t) +
                              " out of range [0, " + std::to_string(p.cols()) + ")");
        for (index_t j = 0; j < p.cols(); ++j)
            g(i, j) = (p(i, j) - (j == t ? S(1) : S(0))) * inv_b;
    }
    return g;
}

/// Mean squared error, averaged over samples and normalized by the feature
/// count: (1/b) sum_n (1/d) ||xhat(n) - x(n)||^2.
template <typename S>
S mse_cost(const Tensor<S>& xhat, const Tensor<S>& x) {
    check_same_shape(xhat.rows(), xhat.cols(), x.rows(), x.cols(), "mse_cost");
    S acc = 0;
    for (index_t i = 0; i < x.size(); ++i) {
        const S e = xhat.data()[i] - x.data()[i];
        acc += e * e;
    }
    return acc / static_cast<S>(x.rows() * x.cols());
}

/// d mse_cost / d xhat = 2 (xhat - x) / (b * d)
template <typename S>
Tensor<S> mse_grad(const Tensor<S>& xhat, const Tensor<S>& x) {
    check_same_shape(xhat.rows(), xhat.cols(), x.rows(), x.cols(), "mse_grad");
    const S k = S(2) / static_cast<S>(x.rows() * x.cols());
    Tensor<S> g(x.rows(), x.cols());
    for (index_t i = 0; i < x.size(); ++i)
        g.data()[i] = k * (xhat.data()[i] - x.data()[i]);
    return g;
}

} // namespace ladder
