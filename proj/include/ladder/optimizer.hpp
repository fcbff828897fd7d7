#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/model.hpp"

namespace ladder {

/// Adam accumulators, one (m, v) pair per parameter span in canonical order,
/// plus one shared step counter for the whole model.
template <typename S>
struct AdamState {
    S beta1 = S(0.9);
    S beta2 = S(0.999);
    S eps_hat = S(1e-8);
    std::uint64_t t = 0;
    std::vector<std::vector<S>> m;
    std::vector<std::vector<S>> v;

    explicit AdamState(LadderNetwork<S>& net) {
        for_each_param(net, [&](const ParamRef<S>& p) {
            m.emplace_back(static_cast<std::size_t>(p.count), S(0));
            v.emplace_back(static_cast<std::size_t>(p.count), S(0));
        });
    }
};

/// One Adam update over every trainable tensor, in canonical order:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   p <- p - lr * mhat / (sqrt(vhat) + eps)
/// lr = 0 leaves parameters untouched but still advances the moments and t.
template <typename S>
void adam_step(LadderNetwork<S>& net, ModelGrads<S>& grads, AdamState<S>& state, S lr) {
    state.t += 1;
    const S correct1 = S(1) - std::pow(state.beta1, static_cast<S>(state.t));
    const S correct2 = S(1) - std::pow(state.beta2, static_cast<S>(state.t));
    std::size_t slot = 0;
    for_each_param_grad(net, grads, [&](const ParamRef<S>& p, const S* g) {
        if (slot >= state.m.size() || state.m[slot].size() != static_cast<std::size_t>(p.count))
            throw std::logic_error("adam_step: state does not match the parameter layout at " +
                                   p.name);
        S* m = state.m[slot].data();
        S* v = state.v[slot].data();
        for (index_t i = 0; i < p.count; ++i) {
            const S gi = g[i];
            if (!std::isfinite(gi))
                throw numeric_error("adam_step: non-finite gradient in " + p.name);
            m[i] = state.beta1 * m[i] + (S(1) - state.beta1) * gi;
            v[i] = state.beta2 * v[i] + (S(1) - state.beta2) * gi * gi;
            const S mhat = m[i] / correct1;
            const S vhat = v[i] / correct2;
            p.values[i] -= lr * mhat / (std::sqrt(vhat) + state.eps_hat);
        }
        ++slot;
    });
}

/// Constant base rate, then a linear ramp to zero over the tail epochs:
/// reaches 0 only after the final epoch.
struct LrSchedule {
    double base_lr = 0.002;
    int total_epochs = 100;
    int decay_start_epoch = 50;
};

inline double lr_at(const LrSchedule& s, int epoch) {
    if (s.decay_start_epoch < 0 || s.decay_start_epoch > s.total_epochs)
        throw value_error("lr_at: decay_start_epoch " + std::to_string(s.decay_start_epoch) +
                          " outside [0, " + std::to_string(s.total_epochs) + "]");
    if (epoch < 0 || epoch >= s.total_epochs)
        throw value_error("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(s.total_epochs) + ")");
    if (epoch < s.decay_start_epoch) return s.base_lr;
    return s.base_lr * static_cast<double>(s.total_epochs - epoch) /
           static_cast<double>(s.total_epochs - s.decay_start_epoch);
}

} // namespace ladder
