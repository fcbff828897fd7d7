#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/layers.hpp"
#include "ladder/random.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

/// One encoder layer: z = batchnorm(h_prev W), h = phi(gamma . (z + beta)).
template <typename S>
struct EncoderLayerParams {
    Tensor<S> W;     // d_prev x d
    Tensor<S> gamma; // 1 x d
    Tensor<S> beta;  // 1 x d
    BatchNormState<S> bn;
};

/// Decoder state at one level l. V projects the denoised layer above down to
/// this width (absent at the top level); c and d hold the five per-neuron
/// combinator coefficient pairs as rows j = 1..5.
template <typename S>
struct DecoderLayerParams {
    Tensor<S> V; // d_above x d, empty at the top level
    Tensor<S> c; // 5 x d
    Tensor<S> d; // 5 x d
};

/// Denoising autoencoder with per-neuron lateral connections. The encoder
/// stack doubles as the classifier; the decoder mirrors the encoder widths
/// level by level. Owns every trainable parameter.
template <typename S>
struct LadderNetwork {
    std::vector<index_t> layer_sizes;            // d_0 .. d_L
    std::vector<EncoderLayerParams<S>> encoder;  // layer l at index l-1, l = 1..L
    std::vector<DecoderLayerParams<S>> decoder;  // level l at index l, l = 0..L
    S input_noise_sigma = S(0.3);
    S eta = S(500);

    index_t depth() const { return static_cast<index_t>(layer_sizes.size()) - 1; }
    index_t input_dim() const { return layer_sizes.front(); }
    index_t class_count() const { return layer_sizes.back(); }

    EncoderLayerParams<S>& enc(index_t l) { return encoder[static_cast<std::size_t>(l - 1)]; }
    const EncoderLayerParams<S>& enc(index_t l) const { return encoder[static_cast<std::size_t>(l - 1)]; }
    DecoderLayerParams<S>& dec(index_t l) { return decoder[static_cast<std::size_t>(l)]; }
    const DecoderLayerParams<S>& dec(index_t l) const { return decoder[static_cast<std::size_t>(l)]; }
};

/// Per-level intermediates of the lateral combinator forward pass.
template <typename S>
struct CombinatorCache {
    Tensor<S> a1, a2, a3, a4; // b x d coefficient fields (a5 is not needed backward)
    Tensor<S> sig;            // sigmoid(a3 . z + a4)
};

/// Everything one training step records: encoder activations, decoder
/// reconstructions, and the caches the backward pass consumes.
template <typename S>
struct ForwardTrace {
    Mode mode = Mode::training;
    Tensor<S> x;                       // clean input
    std::vector<Tensor<S>> z;          // z[0] = x_tilde, z[1..L] normalized preactivations
    std::vector<BnCache<S>> bn_cache;  // per layer 1..L (index l-1)
    std::vector<Tensor<S>> affine;     // a[l] = gamma(z+beta), index l-1
    std::vector<Tensor<S>> h;          // h[0] = x_tilde, h[L] = class probabilities
    std::vector<Tensor<S>> zhat;       // denoised levels 0..L
    std::vector<Tensor<S>> u;          // top-down projections, levels 0..L (u[L] = 0)
    std::vector<CombinatorCache<S>> comb; // per level 0..L

    const Tensor<S>& x_tilde() const { return h.front(); }
    const Tensor<S>& y() const { return h.back(); }
    const Tensor<S>& xhat() const { return zhat.front(); }
    bool has_decoder_pass() const { return !zhat.empty(); }
};

/// Gradients for every trainable tensor, shaped like the parameters.
template <typename S>
struct ModelGrads {
    std::vector<Tensor<S>> W, gamma, beta; // encoder layer l at index l-1
    std::vector<Tensor<S>> V;              // levels 0..L-1
    std::vector<Tensor<S>> c, d;           // levels 0..L
};

namespace detail {

template <typename S>
inline S sigmoid(S v) {
    return S(1) / (S(1) + std::exp(-v));
}

} // namespace detail

/// zhat_i = a1 z_i + a2 sigmoid(a3 z_i + a4) + a5 with a_j = c_j u_i + d_j.
/// c and d_par are 5 x d (row j holds coefficient j for every neuron).
template <typename S>
std::pair<Tensor<S>, CombinatorCache<S>> lateral_combinator(const Tensor<S>& z, const Tensor<S>& u,
                                                            const Tensor<S>& c,
                                                            const Tensor<S>& d_par) {
    check_same_shape(z.rows(), z.cols(), u.rows(), u.cols(), "lateral_combinator");
    if (c.rows() != 5 || c.cols() != z.cols() || !c.same_shape(d_par))
        throw shape_error("lateral_combinator: coefficient shapes " + c.shape() + ", " +
                          d_par.shape() + " do not fit input " + z.shape());
    const index_t b = z.rows(), d = z.cols();
    CombinatorCache<S> cache;
    cache.a1 = Tensor<S>(b, d);
    cache.a2 = Tensor<S>(b, d);
    cache.a3 = Tensor<S>(b, d);
    cache.a4 = Tensor<S>(b, d);
    cache.sig = Tensor<S>(b, d);
    Tensor<S> zhat(b, d);
    for (index_t i = 0; i < b; ++i)
        for (index_t j = 0; j < d; ++j) {
            const S ui = u(i, j), zi = z(i, j);
            const S a1 = c(0, j) * ui + d_par(0, j);
            const S a2 = c(1, j) * ui + d_par(1, j);
            const S a3 = c(2, j) * ui + d_par(2, j);
            const S a4 = c(3, j) * ui + d_par(3, j);
            const S a5 = c(4, j) * ui + d_par(4, j);
            const S s = detail::sigmoid(a3 * zi + a4);
            cache.a1(i, j) = a1;
            cache.a2(i, j) = a2;
            cache.a3(i, j) = a3;
            cache.a4(i, j) = a4;
            cache.sig(i, j) = s;
            zhat(i, j) = a1 * zi + a2 * s + a5;
        }
    return {std::move(zhat), std::move(cache)};
}

template <typename S>
struct CombinatorGrads {
    Tensor<S> grad_z, grad_u; // b x d
    Tensor<S> grad_c, grad_d; // 5 x d
};

template <typename S>
CombinatorGrads<S> lateral_combinator_backward(const Tensor<S>& grad_zhat, const Tensor<S>& z,
                                               const Tensor<S>& u, const Tensor<S>& c,
                                               const CombinatorCache<S>& cache) {
    check_same_shape(grad_zhat.rows(), grad_zhat.cols(), z.rows(), z.cols(),
                     "lateral_combinator_backward");
    const index_t b = z.rows(), d = z.cols();
    CombinatorGrads<S> g;
    g.grad_z = Tensor<S>(b, d);
    g.grad_u = Tensor<S>(b, d);
    g.grad_c = Tensor<S>(5, d);
    g.grad_d = Tensor<S>(5, d);
    for (index_t i = 0; i < b; ++i)
        for (index_t j = 0; j < d; ++j) {
            const S go = grad_zhat(i, j);
            const S zi = z(i, j), ui = u(i, j);
            const S s = cache.sig(i, j);
            const S da1 = go * zi;
            const S da2 = go * s;
            const S dpre = go * cache.a2(i, j) * s * (S(1) - s); // through the sigmoid
            const S da3 = dpre * zi;
            const S da4 = dpre;
            const S da5 = go;
            g.grad_z(i, j) = go * cache.a1(i, j) + dpre * cache.a3(i, j);
            g.grad_u(i, j) = da1 * c(0, j) + da2 * c(1, j) + da3 * c(2, j) + da4 * c(3, j) +
                             da5 * c(4, j);
            g.grad_c(0, j) += da1 * ui;
            g.grad_c(1, j) += da2 * ui;
            g.grad_c(2, j) += da3 * ui;
            g.grad_c(3, j) += da4 * ui;
            g.grad_c(4, j) += da5 * ui;
            g.grad_d(0, j) += da1;
            g.grad_d(1, j) += da2;
            g.grad_d(2, j) += da3;
            g.grad_d(3, j) += da4;
            g.grad_d(4, j) += da5;
        }
    return g;
}

/// Bottom-up encoder sweep. Training mode corrupts the input with Gaussian
/// noise and normalizes against minibatch statistics; inference mode is
/// noise-free and uses running statistics. Hidden layers rectify, the top
/// layer applies softmax.
template <typename S>
ForwardTrace<S> encoder_forward(LadderNetwork<S>& net, const Tensor<S>& x, Rng& rng, Mode mode) {
    const index_t L = net.depth();
    if (x.cols() != net.input_dim())
        throw shape_error("encoder_forward: input " + x.shape() + " does not match d_0 = " +
                          std::to_string(net.input_dim()));
    ForwardTrace<S> trace;
    trace.mode = mode;
    trace.x = x;
    trace.z.resize(static_cast<std::size_t>(L) + 1);
    trace.bn_cache.resize(static_cast<std::size_t>(L));
    trace.affine.resize(static_cast<std::size_t>(L));
    trace.h.resize(static_cast<std::size_t>(L) + 1);

    if (mode == Mode::training && net.input_noise_sigma > S(0)) {
        Tensor<S> noise = gaussian<S>(rng, x.rows(), x.cols(), net.input_noise_sigma);
        trace.h[0] = add(x, noise);
    } else {
        trace.h[0] = x;
    }
    trace.z[0] = trace.h[0];

    for (index_t l = 1; l <= L; ++l) {
        auto& layer = net.enc(l);
        layer.bn.mode = mode;
        Tensor<S> pre = matmul(trace.h[static_cast<std::size_t>(l - 1)], layer.W);
        auto [zl, cache] = batchnorm_forward(pre, layer.bn);
        Tensor<S> a = scale_shift(zl, layer.gamma, layer.beta);
        Tensor<S> hl = (l == L) ? softmax(a) : relu(a);
        if (!all_finite(hl))
            throw numeric_error("encoder_forward: non-finite activations at layer " +
                                std::to_string(l));
        trace.z[static_cast<std::size_t>(l)] = std::move(zl);
        trace.bn_cache[static_cast<std::size_t>(l - 1)] = std::move(cache);
        trace.affine[static_cast<std::size_t>(l - 1)] = std::move(a);
        trace.h[static_cast<std::size_t>(l)] = std::move(hl);
    }
    return trace;
}

/// Top-down decoder sweep. Level L combines the lateral signal with u = 0;
/// each level below receives u = zhat_above V. The lateral input at level 0
/// is the corrupted x_tilde, while the reconstruction target stays the clean x.
template <typename S>
void decoder_forward(const LadderNetwork<S>& net, ForwardTrace<S>& trace) {
    const index_t L = net.depth();
    if (trace.h.size() != static_cast<std::size_t>(L) + 1)
        throw shape_error("decoder_forward: encoder trace incomplete");
    trace.zhat.resize(static_cast<std::size_t>(L) + 1);
    trace.u.resize(static_cast<std::size_t>(L) + 1);
    trace.comb.resize(static_cast<std::size_t>(L) + 1);

    for (index_t l = L; l >= 0; --l) {
        const auto& zl = trace.z[static_cast<std::size_t>(l)];
        if (l == L) {
            trace.u[static_cast<std::size_t>(l)] = Tensor<S>(zl.rows(), zl.cols());
        } else {
            trace.u[static_cast<std::size_t>(l)] =
                matmul(trace.zhat[static_cast<std::size_t>(l + 1)], net.dec(l).V);
        }
        auto [zhat, cache] = lateral_combinator(zl, trace.u[static_cast<std::size_t>(l)],
                                                net.dec(l).c, net.dec(l).d);
        if (!all_finite(zhat))
            throw numeric_error("decoder_forward: non-finite reconstruction at level " +
                                std::to_string(l));
        trace.zhat[static_cast<std::size_t>(l)] = std::move(zhat);
        trace.comb[static_cast<std::size_t>(l)] = std::move(cache);
    }
}

template <typename S>
struct Costs {
    S total = 0;
    S classification = 0;
    S reconstruction = 0;
};

/// C = C_class + eta * C_reconst. The classification term scores the
/// corrupted-input predictions; the reconstruction term compares xhat with
/// the clean input. eta = 0 reduces to pure supervised cost, bit-exactly.
template <typename S>
Costs<S> total_cost(const ForwardTrace<S>& trace, const std::vector<int>& targets, S eta) {
    Costs<S> c;
    c.classification = cross_entropy(trace.y(), targets);
    if (trace.has_decoder_pass())
        c.reconstruction = mse_cost(trace.xhat(), trace.x);
    c.total = c.classification + eta * c.reconstruction;
    return c;
}

template <typename S>
ModelGrads<S> make_zero_grads(const LadderNetwork<S>& net) {
    const index_t L = net.depth();
    ModelGrads<S> g;
    for (index_t l = 1; l <= L; ++l) {
        const auto& e = net.enc(l);
        g.W.emplace_back(e.W.rows(), e.W.cols());
        g.gamma.emplace_back(1, e.gamma.cols());
        g.beta.emplace_back(1, e.beta.cols());
    }
    for (index_t l = 0; l <= L; ++l) {
        if (l < L) g.V.emplace_back(net.dec(l).V.rows(), net.dec(l).V.cols());
        g.c.emplace_back(5, net.dec(l).c.cols());
        g.d.emplace_back(5, net.dec(l).d.cols());
    }
    return g;
}

/// Exact gradient of C = C_class + eta * C_reconst for every trainable
/// parameter. Encoder parameters collect contributions from both the
/// classification path and, through the lateral connections, the
/// reconstruction path. With eta = 0 the decoder gradients are exactly zero.
template <typename S>
ModelGrads<S> backward(const LadderNetwork<S>& net, const ForwardTrace<S>& trace,
                       const std::vector<int>& targets, S eta) {
    const index_t L = net.depth();
    if (trace.h.size() != static_cast<std::size_t>(L) + 1)
        throw std::logic_error("backward: encoder trace incomplete");
    if (eta != S(0) && !trace.has_decoder_pass())
        throw std::logic_error("backward: decoder trace required when eta != 0");
    if (trace.mode != Mode::training)
        throw std::logic_error("backward: trace must come from a training-mode forward");

    ModelGrads<S> grads = make_zero_grads(net);

    // Reconstruction path, bottom level upward. Everything scales linearly
    // with the seed gradient eta * d mse / d xhat, so eta = 0 is a no-op.
    std::vector<Tensor<S>> lateral(static_cast<std::size_t>(L) + 1); // d C / d z[l]
    if (eta != S(0)) {
        Tensor<S> g_zhat = scale(mse_grad(trace.xhat(), trace.x), eta);
        for (index_t l = 0; l <= L; ++l) {
            auto cg = lateral_combinator_backward(g_zhat, trace.z[static_cast<std::size_t>(l)],
                                                  trace.u[static_cast<std::size_t>(l)],
                                                  net.dec(l).c,
                                                  trace.comb[static_cast<std::size_t>(l)]);
            lateral[static_cast<std::size_t>(l)] = std::move(cg.grad_z);
            grads.c[static_cast<std::size_t>(l)] = std::move(cg.grad_c);
            grads.d[static_cast<std::size_t>(l)] = std::move(cg.grad_d);
            if (l < L) {
                // u[l] = zhat[l+1] V
                grads.V[static_cast<std::size_t>(l)] =
                    matmul_transpose_a(trace.zhat[static_cast<std::size_t>(l + 1)], cg.grad_u);
                g_zhat = matmul_transpose_b(cg.grad_u, net.dec(l).V);
            }
        }
    }

    // Classification path joined with the lateral contributions, top down.
    Tensor<S> grad_affine = softmax_cross_entropy_grad(trace.y(), targets);
    for (index_t l = L; l >= 1; --l) {
        const auto& layer = net.enc(l);
        auto ss = scale_shift_backward(grad_affine, trace.z[static_cast<std::size_t>(l)],
                                       layer.gamma, layer.beta);
        grads.gamma[static_cast<std::size_t>(l - 1)] = std::move(ss.grad_gamma);
        grads.beta[static_cast<std::size_t>(l - 1)] = std::move(ss.grad_beta);

        Tensor<S> grad_z = std::move(ss.grad_z);
        if (!lateral[static_cast<std::size_t>(l)].empty())
            add_inplace(grad_z, lateral[static_cast<std::size_t>(l)]);

        Tensor<S> grad_pre = batchnorm_backward(grad_z, trace.bn_cache[static_cast<std::size_t>(l - 1)]);
        grads.W[static_cast<std::size_t>(l - 1)] =
            matmul_transpose_a(trace.h[static_cast<std::size_t>(l - 1)], grad_pre);
        if (l > 1) {
            Tensor<S> grad_h = matmul_transpose_b(grad_pre, layer.W);
            grad_affine = relu_backward(grad_h, trace.affine[static_cast<std::size_t>(l - 2)]);
        }
    }
    // The gradient into h[0] = x_tilde (both through W^1 and the level-0
    // lateral tap) stops there: the corrupted input is data, not a parameter.
    return grads;
}

/// Fresh network. W and V entries are N(0, 1/fan_in); gamma starts at 1 and
/// beta at 0; the combinator starts as the identity in z (d_1 = 1, everything
/// else 0), so a freshly initialized decoder passes the lateral signal through.
template <typename S>
LadderNetwork<S> init_params(const std::vector<index_t>& layer_sizes, Rng& rng,
                             S input_noise_sigma = S(0.3), S eta = S(500)) {
    if (layer_sizes.size() < 2)
        throw value_error("init_params: need at least an input and an output layer");
    for (index_t d : layer_sizes)
        if (d < 1) throw value_error("init_params: degenerate layer size " + std::to_string(d));
    if (layer_sizes.back() < 2)
        throw value_error("init_params: class count must be >= 2, got " +
                          std::to_string(layer_sizes.back()));

    LadderNetwork<S> net;
    net.layer_sizes = layer_sizes;
    net.input_noise_sigma = input_noise_sigma;
    net.eta = eta;
    const index_t L = net.depth();

    for (index_t l = 1; l <= L; ++l) {
        const index_t d_in = layer_sizes[static_cast<std::size_t>(l - 1)];
        const index_t d_out = layer_sizes[static_cast<std::size_t>(l)];
        EncoderLayerParams<S> e;
        e.W = gaussian<S>(rng, d_in, d_out, S(1) / std::sqrt(static_cast<S>(d_in)));
        e.gamma = Tensor<S>::full(1, d_out, S(1));
        e.beta = Tensor<S>(1, d_out);
        e.bn = BatchNormState<S>(d_out);
        net.encoder.push_back(std::move(e));
    }
    for (index_t l = 0; l <= L; ++l) {
        const index_t d = layer_sizes[static_cast<std::size_t>(l)];
        DecoderLayerParams<S> dec;
        if (l < L) {
            const index_t d_above = layer_sizes[static_cast<std::size_t>(l + 1)];
            dec.V = gaussian<S>(rng, d_above, d, S(1) / std::sqrt(static_cast<S>(d_above)));
        }
        dec.c = Tensor<S>(5, d);
        dec.d = Tensor<S>(5, d);
        for (index_t j = 0; j < d; ++j) dec.d(0, j) = S(1);
        net.decoder.push_back(std::move(dec));
    }
    return net;
}

/// A named view of one parameter (or gradient/optimizer-slot) span. The five
/// combinator coefficient rows enumerate separately: dec.l2.c4 is row 4 of c
/// at level 2, matching the per-neuron coefficient indexing j = 1..5.
template <typename S>
struct ParamRef {
    std::string name;
    S* values;
    index_t count;
};

/// Visits every trainable tensor in the fixed canonical order: encoder layers
/// bottom-up (W, gamma, beta), then decoder levels bottom-up (V, c1..c5,
/// d1..d5). Checkpoints and optimizer state both key off this order.
template <typename S, typename Fn>
void for_each_param(LadderNetwork<S>& net, Fn&& fn) {
    const index_t L = net.depth();
    for (index_t l = 1; l <= L; ++l) {
        auto& e = net.enc(l);
        const std::string base = "enc.l" + std::to_string(l) + ".";
        fn(ParamRef<S>{base + "W", e.W.data(), e.W.size()});
        fn(ParamRef<S>{base + "gamma", e.gamma.data(), e.gamma.size()});
        fn(ParamRef<S>{base + "beta", e.beta.data(), e.beta.size()});
    }
    for (index_t l = 0; l <= L; ++l) {
        auto& dec = net.dec(l);
        const std::string base = "dec.l" + std::to_string(l) + ".";
        if (l < L) fn(ParamRef<S>{base + "V", dec.V.data(), dec.V.size()});
        const index_t d = dec.c.cols();
        for (index_t j = 0; j < 5; ++j)
            fn(ParamRef<S>{base + "c" + std::to_string(j + 1), dec.c.row(j), d});
        for (index_t j = 0; j < 5; ++j)
            fn(ParamRef<S>{base + "d" + std::to_string(j + 1), dec.d.row(j), d});
    }
}

/// Same order as for_each_param, pairing each parameter with its gradient.
template <typename S, typename Fn>
void for_each_param_grad(LadderNetwork<S>& net, ModelGrads<S>& grads, Fn&& fn) {
    const index_t L = net.depth();
    for (index_t l = 1; l <= L; ++l) {
        auto& e = net.enc(l);
        const auto i = static_cast<std::size_t>(l - 1);
        const std::string base = "enc.l" + std::to_string(l) + ".";
        fn(ParamRef<S>{base + "W", e.W.data(), e.W.size()}, grads.W[i].data());
        fn(ParamRef<S>{base + "gamma", e.gamma.data(), e.gamma.size()}, grads.gamma[i].data());
        fn(ParamRef<S>{base + "beta", e.beta.data(), e.beta.size()}, grads.beta[i].data());
    }
    for (index_t l = 0; l <= L; ++l) {
        auto& dec = net.dec(l);
        const auto i = static_cast<std::size_t>(l);
        const std::string base = "dec.l" + std::to_string(l) + ".";
        if (l < L) fn(ParamRef<S>{base + "V", dec.V.data(), dec.V.size()}, grads.V[i].data());
        const index_t d = dec.c.cols();
        for (index_t j = 0; j < 5; ++j)
            fn(ParamRef<S>{base + "c" + std::to_string(j + 1), dec.c.row(j), d},
               grads.c[i].row(j));
        for (index_t j = 0; j < 5; ++j)
            fn(ParamRef<S>{base + "d" + std::to_string(j + 1), dec.d.row(j), d},
               grads.d[i].row(j));
    }
}

template <typename S>
index_t param_count(const LadderNetwork<S>& net) {
    index_t n = 0;
    for_each_param(const_cast<LadderNetwork<S>&>(net),
                   [&](const ParamRef<S>& p) { n += p.count; });
    return n;
}

} // namespace ladder
