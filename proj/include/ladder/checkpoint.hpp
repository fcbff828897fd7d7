#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/model.hpp"
#include "ladder/optimizer.hpp"

namespace ladder {

/// Flat binary container: layer sizes, every parameter tensor under its
/// canonical name (enc.l3.W, dec.l2.V, dec.l2.c4, ...), batch-norm running
/// statistics, RNG state, and optionally the optimizer moments (m./v. plus t)
/// for exact training resumption. Fixed field order and little-endian scalars
/// keep save/load round trips byte-stable.
template <typename S>
struct Checkpoint {
    LadderNetwork<S> net;
    std::uint64_t master_seed = 0;
    std::uint64_t rng_state = 0;
    std::uint64_t epochs_completed = 0;
    std::optional<AdamState<S>> adam;
};

namespace ckpt {

constexpr char kMagic[8] = {'L', 'D', 'D', 'R', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw io_error(path + ": truncated checkpoint");
    return v;
}

inline void write_name(std::ofstream& out, const std::string& name) {
    write_pod(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
}

inline std::string read_name(std::ifstream& in, const std::string& path) {
    const auto len = read_pod<std::uint16_t>(in, path);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw io_error(path + ": truncated checkpoint");
    return name;
}

template <typename S>
void write_span(std::ofstream& out, const std::string& name, const S* values, index_t count) {
    write_name(out, name);
    write_pod(out, static_cast<std::int64_t>(count));
    out.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(count * sizeof(S)));
}

template <typename S>
void read_span(std::ifstream& in, const std::string& path, const std::string& expect_name,
               S* values, index_t count) {
    const auto name = read_name(in, path);
    if (name != expect_name)
        throw io_error(path + ": expected entry '" + expect_name + "', found '" + name + "'");
    const auto stored = read_pod<std::int64_t>(in, path);
    if (stored != count)
        throw io_error(path + ": entry '" + name + "' holds " + std::to_string(stored) +
                       " values, expected " + std::to_string(count));
    in.read(reinterpret_cast<char*>(values), static_cast<std::streamsize>(count * sizeof(S)));
    if (!in) throw io_error(path + ": truncated checkpoint");
}

} // namespace ckpt

/// Network with the right shapes and all values zero; checkpoint loading
/// fills it in.
template <typename S>
LadderNetwork<S> make_network_shell(const std::vector<index_t>& layer_sizes) {
    LadderNetwork<S> net;
    net.layer_sizes = layer_sizes;
    const index_t L = net.depth();
    for (index_t l = 1; l <= L; ++l) {
        EncoderLayerParams<S> e;
        e.W = Tensor<S>(layer_sizes[static_cast<std::size_t>(l - 1)],
                        layer_sizes[static_cast<std::size_t>(l)]);
        e.gamma = Tensor<S>(1, layer_sizes[static_cast<std::size_t>(l)]);
        e.beta = Tensor<S>(1, layer_sizes[static_cast<std::size_t>(l)]);
        e.bn = BatchNormState<S>(layer_sizes[static_cast<std::size_t>(l)]);
        net.encoder.push_back(std::move(e));
    }
    for (index_t l = 0; l <= L; ++l) {
        DecoderLayerParams<S> dec;
        if (l < L)
            dec.V = Tensor<S>(layer_sizes[static_cast<std::size_t>(l + 1)],
                              layer_sizes[static_cast<std::size_t>(l)]);
        dec.c = Tensor<S>(5, layer_sizes[static_cast<std::size_t>(l)]);
        dec.d = Tensor<S>(5, layer_sizes[static_cast<std::size_t>(l)]);
        net.decoder.push_back(std::move(dec));
    }
    return net;
}

template <typename S>
void save_checkpoint(const std::string& path, const Checkpoint<S>& ck) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path);
    out.write(ckpt::kMagic, sizeof ckpt::kMagic);
    ckpt::write_pod(out, static_cast<std::uint8_t>(sizeof(S)));

    auto& net = const_cast<LadderNetwork<S>&>(ck.net);
    ckpt::write_pod(out, static_cast<std::uint32_t>(net.layer_sizes.size()));
    for (index_t d : net.layer_sizes) ckpt::write_pod(out, static_cast<std::int64_t>(d));

    ckpt::write_pod(out, static_cast<double>(net.eta));
    ckpt::write_pod(out, static_cast<double>(net.input_noise_sigma));
    ckpt::write_pod(out, static_cast<double>(net.encoder.empty() ? S(1e-5) : net.encoder[0].bn.epsilon));
    ckpt::write_pod(out, static_cast<double>(net.encoder.empty() ? S(0.99) : net.encoder[0].bn.momentum));
    ckpt::write_pod(out, ck.master_seed);
    ckpt::write_pod(out, ck.rng_state);
    ckpt::write_pod(out, ck.epochs_completed);

    std::uint32_t n_params = 0;
    for_each_param(net, [&](const ParamRef<S>&) { ++n_params; });
    ckpt::write_pod(out, n_params);
    for_each_param(net, [&](const ParamRef<S>& p) {
        ckpt::write_span(out, p.name, p.values, p.count);
    });

    for (index_t l = 1; l <= net.depth(); ++l) {
        const auto& bn = net.enc(l).bn;
        const std::string base = "enc.l" + std::to_string(l) + ".bn.";
        ckpt::write_span(out, base + "mean", bn.running_mean.data(), bn.running_mean.size());
        ckpt::write_span(out, base + "var", bn.running_var.data(), bn.running_var.size());
    }

    ckpt::write_pod(out, static_cast<std::uint8_t>(ck.adam.has_value() ? 1 : 0));
    if (ck.adam) {
        ckpt::write_pod(out, ck.adam->t);
        std::size_t slot = 0;
        for_each_param(net, [&](const ParamRef<S>& p) {
            ckpt::write_span(out, "m." + p.name, ck.adam->m[slot].data(), p.count);
            ckpt::write_span(out, "v." + p.name, ck.adam->v[slot].data(), p.count);
            ++slot;
        });
    }
    if (!out) throw io_error("write failed for " + path);
}

/// Scalar width (4 or 8 bytes) stored in a checkpoint, without loading it.
inline int checkpoint_scalar_size(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, ckpt::kMagic, 8) != 0)
        throw io_error(path + ": not a checkpoint file");
    return in.get();
}

template <typename S>
Checkpoint<S> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, ckpt::kMagic, 8) != 0)
        throw io_error(path + ": not a checkpoint file");
    const auto scalar = ckpt::read_pod<std::uint8_t>(in, path);
    if (scalar != sizeof(S))
        throw io_error(path + ": stores " + std::to_string(scalar * 8) + "-bit scalars, expected " +
                       std::to_string(sizeof(S) * 8) + "-bit");

    const auto n_sizes = ckpt::read_pod<std::uint32_t>(in, path);
    std::vector<index_t> sizes(n_sizes);
    for (auto& d : sizes) d = ckpt::read_pod<std::int64_t>(in, path);

    Checkpoint<S> ck;
    ck.net = make_network_shell<S>(sizes);
    ck.net.eta = static_cast<S>(ckpt::read_pod<double>(in, path));
    ck.net.input_noise_sigma = static_cast<S>(ckpt::read_pod<double>(in, path));
    const auto bn_eps = static_cast<S>(ckpt::read_pod<double>(in, path));
    const auto bn_mom = static_cast<S>(ckpt::read_pod<double>(in, path));
    for (auto& e : ck.net.encoder) {
        e.bn.epsilon = bn_eps;
        e.bn.momentum = bn_mom;
    }
    ck.master_seed = ckpt::read_pod<std::uint64_t>(in, path);
    ck.rng_state = ckpt::read_pod<std::uint64_t>(in, path);
    ck.epochs_completed = ckpt::read_pod<std::uint64_t>(in, path);

    const auto n_params = ckpt::read_pod<std::uint32_t>(in, path);
    std::uint32_t expect = 0;
    for_each_param(ck.net, [&](const ParamRef<S>&) { ++expect; });
    if (n_params != expect)
        throw io_error(path + ": " + std::to_string(n_params) + " parameter entries, expected " +
                       std::to_string(expect));
    for_each_param(ck.net, [&](const ParamRef<S>& p) {
        ckpt::read_span(in, path, p.name, p.values, p.count);
    });

    for (index_t l = 1; l <= ck.net.depth(); ++l) {
        auto& bn = ck.net.enc(l).bn;
        const std::string base = "enc.l" + std::to_string(l) + ".bn.";
        ckpt::read_span(in, path, base + "mean", bn.running_mean.data(), bn.running_mean.size());
        ckpt::read_span(in, path, base + "var", bn.running_var.data(), bn.running_var.size());
    }

    const auto has_adam = ckpt::read_pod<std::uint8_t>(in, path);
    if (has_adam) {
        AdamState<S> adam(ck.net);
        adam.t = ckpt::read_pod<std::uint64_t>(in, path);
        std::size_t slot = 0;
        for_each_param(ck.net, [&](const ParamRef<S>& p) {
            ckpt::read_span(in, path, "m." + p.name, adam.m[slot].data(), p.count);
            ckpt::read_span(in, path, "v." + p.name, adam.v[slot].data(), p.count);
            ++slot;
        });
        ck.adam = std::move(adam);
    }
    return ck;
}

} // namespace ladder
