#include <doctest.h>

#include <cmath>

#include "ladder/optimizer.hpp"

using ladder::AdamState;
using ladder::index_t;
using ladder::LrSchedule;
using ladder::Rng;

namespace {

ladder::LadderNetwork<double> tiny_net(std::uint64_t seed) {
    Rng rng(seed);
    return ladder::init_params<double>({3, 4, 2}, rng, 0.0, 1.0);
}

ladder::ModelGrads<double> grads_like(ladder::LadderNetwork<double>& net, double fill) {
    auto g = ladder::make_zero_grads(net);
    auto set = [&](std::vector<ladder::Tensor<double>>& ts) {
        for (auto& t : ts)
            for (index_t i = 0; i < t.size(); ++i) t.data()[i] = fill;
    };
    set(g.W);
    set(g.gamma);
    set(g.beta);
    set(g.V);
    set(g.c);
    set(g.d);
    return g;
}

std::vector<double> snapshot(ladder::LadderNetwork<double>& net) {
    std::vector<double> out;
    for_each_param(net, [&](const ladder::ParamRef<double>& p) {
        out.insert(out.end(), p.values, p.values + p.count);
    });
    return out;
}

} // namespace

TEST_SUITE("optim") {

TEST_CASE("schedule holds the base rate, then ramps linearly to zero") {
    LrSchedule s{0.002, 100, 50};
    CHECK(lr_at(s, 0) == 0.002);
    CHECK(lr_at(s, 49) == 0.002);
    CHECK(lr_at(s, 50) == 0.002); // continuous at the ramp start
    CHECK(lr_at(s, 75) == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(lr_at(s, 99) == doctest::Approx(0.00004).epsilon(1e-12));
}

TEST_CASE("schedule is non-increasing") {
    LrSchedule s{0.002, 100, 50};
    double prev = lr_at(s, 0);
    for (int e = 1; e < 100; ++e) {
        const double cur = lr_at(s, e);
        CHECK(cur <= prev);
        prev = cur;
    }
    CHECK(prev > 0.0); // zero only after the final epoch
}

TEST_CASE("schedule rejects out-of-range epochs") {
    LrSchedule s{0.002, 100, 50};
    CHECK_THROWS_AS(lr_at(s, -1), ladder::value_error);
    CHECK_THROWS_AS(lr_at(s, 100), ladder::value_error);
}

TEST_CASE("zero gradients with a fresh state leave parameters unchanged") {
    auto net = tiny_net(1);
    const auto before = snapshot(net);
    AdamState<double> state(net);
    auto g = grads_like(net, 0.0);
    adam_step(net, g, state, 0.002);
    CHECK(snapshot(net) == before);
    CHECK(state.t == 1);
}

TEST_CASE("first update magnitude is the learning rate per coordinate") {
    auto net = tiny_net(2);
    const auto before = snapshot(net);
    AdamState<double> state(net);
    auto g = grads_like(net, 0.37); // any nonzero value: bias correction makes mhat/sqrt(vhat) = 1
    adam_step(net, g, state, 0.01);
    const auto after = snapshot(net);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(before[i] - after[i] == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("three-step scalar recurrence against frozen reference values") {
    // Independent recurrence: beta1 .9, beta2 .999, eps 1e-8, lr .1,
    // g = 1 at every step, starting from 0.5.
    auto net = tiny_net(3);
    for_each_param(net, [&](const ladder::ParamRef<double>& p) {
        for (index_t i = 0; i < p.count; ++i) p.values[i] = 0.5;
    });
    AdamState<double> state(net);
    auto g = grads_like(net, 1.0);
    const double expected[3] = {0.400000001, 0.30000000200000065, 0.20000000300000068};
    for (int step = 0; step < 3; ++step) {
        adam_step(net, g, state, 0.1);
        const auto snap = snapshot(net);
        for (double v : snap) CHECK(v == doctest::Approx(expected[step]).epsilon(1e-12));
    }
}

TEST_CASE("first step is scale-equivariant") {
    // mhat/sqrt(vhat) collapses to sign(g) at t = 1, so scaling every
    // gradient by k > 0 reproduces the same update up to the eps stabilizer.
    auto net_a = tiny_net(4);
    auto net_b = net_a;
    AdamState<double> sa(net_a), sb(net_b);
    auto ga = grads_like(net_a, 0.11);
    auto gb = grads_like(net_b, 0.44);
    adam_step(net_a, ga, sa, 0.005);
    adam_step(net_b, gb, sb, 0.005);
    const auto a = snapshot(net_a), b = snapshot(net_b);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-7));
}

TEST_CASE("lr zero advances moments and the counter without moving parameters") {
    auto net = tiny_net(5);
    const auto before = snapshot(net);
    AdamState<double> state(net);
    auto g = grads_like(net, 1.5);
    adam_step(net, g, state, 0.0);
    CHECK(snapshot(net) == before);
    CHECK(state.t == 1);
    CHECK(state.m.front().front() == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(state.v.front().front() == doctest::Approx(0.00225).epsilon(1e-12));
}

TEST_CASE("non-finite gradients are rejected with the parameter name") {
    auto net = tiny_net(6);
    AdamState<double> state(net);
    auto g = grads_like(net, 0.0);
    g.W[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(adam_step(net, g, state, 0.01), doctest::Contains("enc.l1.W"),
                         ladder::numeric_error);
}

} // TEST_SUITE
