#pragma once

// Central finite differences for gradient tests. Lives in test code only and
// never calls a backward function: the forward evaluation is the oracle.

#include <cmath>
#include <functional>

#include "ladder/tensor.hpp"

namespace testutil {

/// Worst relative error between an analytic gradient tensor and central
/// differences of cost_fn with respect to param's coordinates.
template <typename S>
double fd_max_rel_error(ladder::Tensor<S>& param, const ladder::Tensor<S>& analytic,
                        const std::function<double()>& cost_fn, double step = 1e-5) {
    double worst = 0;
    for (ladder::index_t i = 0; i < param.size(); ++i) {
        const S saved = param.data()[i];
        param.data()[i] = saved + static_cast<S>(step);
        const double up = cost_fn();
        param.data()[i] = saved - static_cast<S>(step);
        const double down = cost_fn();
        param.data()[i] = saved;
        const double fd = (up - down) / (2 * step);
        const double rel =
            std::abs(static_cast<double>(analytic.data()[i]) - fd) / (std::abs(fd) + 1e-8);
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace testutil
