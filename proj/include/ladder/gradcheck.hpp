#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ladder/model.hpp"
#include "ladder/random.hpp"

namespace ladder {

struct GradCheckGroup {
    std::string name;
    double max_rel_error = 0.0;
    double max_abs_analytic = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckGroup> groups;
    double max_rel_error = 0.0;
    double tolerance = 1e-4;
    bool passed = false;
};

namespace detail {

/// Total cost as a function of the parameters, with the input fixed. The
/// check runs noise-free (sigma plays no role in the parameter gradients)
/// but in training mode, so batch statistics stay on the differentiated path.
template <typename S>
S gradcheck_cost(LadderNetwork<S>& net, const Tensor<S>& x, const std::vector<int>& targets,
                 S eta) {
    Rng unused(0);
    auto trace = encoder_forward(net, x, unused, Mode::training);
    decoder_forward(net, trace);
    return total_cost(trace, targets, eta).total;
}

} // namespace detail

/// Central finite differences against the analytic gradients, every
/// coordinate of every parameter tensor. Relative error per coordinate is
/// |analytic - fd| / (|fd| + 1e-8); a group fails if its worst coordinate
/// exceeds the tolerance. The supplied analytic gradients are checked, which
/// lets a test feed deliberately corrupted values through the same path.
template <typename S>
GradCheckReport gradcheck_against(LadderNetwork<S>& net, ModelGrads<S>& analytic,
                                  const Tensor<S>& x, const std::vector<int>& targets, S eta,
                                  double step = 1e-5, double tolerance = 1e-4) {
    GradCheckReport report;
    report.tolerance = tolerance;
    for_each_param_grad(net, analytic, [&](const ParamRef<S>& p, const S* g) {
        GradCheckGroup group;
        group.name = p.name;
        for (index_t i = 0; i < p.count; ++i) {
            const S saved = p.values[i];
            p.values[i] = saved + static_cast<S>(step);
            const double up = static_cast<double>(detail::gradcheck_cost(net, x, targets, eta));
            p.values[i] = saved - static_cast<S>(step);
            const double down = static_cast<double>(detail::gradcheck_cost(net, x, targets, eta));
            p.values[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double rel = std::abs(static_cast<double>(g[i]) - fd) / (std::abs(fd) + 1e-8);
            group.max_rel_error = std::max(group.max_rel_error, rel);
            group.max_abs_analytic = std::max(group.max_abs_analytic, std::abs(static_cast<double>(g[i])));
        }
        report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
        report.groups.push_back(std::move(group));
    });
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

/// Builds a throwaway network and batch from the seed, computes the analytic
/// gradients, and verifies them coordinate by coordinate.
template <typename S>
GradCheckReport gradcheck(const std::vector<index_t>& layer_sizes, index_t batch, S eta,
                          std::uint64_t seed, double step = 1e-5, double tolerance = 1e-4) {
    Rng rng(seed);
    Rng init_rng = rng.split(1);
    Rng data_rng = rng.split(2);
    auto net = init_params<S>(layer_sizes, init_rng, S(0), eta);
    // Nudge the decoder off its identity initialization so every coefficient
    // sits on a generic point of the cost surface.
    Rng jitter = rng.split(3);
    for (auto& dec : net.decoder) {
        add_inplace(dec.c, gaussian<S>(jitter, 5, dec.c.cols(), S(0.2)));
        add_inplace(dec.d, gaussian<S>(jitter, 5, dec.d.cols(), S(0.2)));
    }

    Tensor<S> x = gaussian<S>(data_rng, batch, layer_sizes.front(), S(1));
    std::vector<int> targets(static_cast<std::size_t>(batch));
    for (auto& t : targets)
        t = static_cast<int>(data_rng.next_below(static_cast<std::uint64_t>(layer_sizes.back())));

    Rng unused(0);
    auto trace = encoder_forward(net, x, unused, Mode::training);
    decoder_forward(net, trace);
    auto grads = backward(net, trace, targets, eta);
    return gradcheck_against(net, grads, x, targets, eta, step, tolerance);
}

} // namespace ladder
