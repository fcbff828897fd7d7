#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/random.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

/// Labeled image set: one row per sample, pixels scaled to [0, 1].
template <typename S>
struct Dataset {
    Tensor<S> images;        // n x 784
    std::vector<int> labels; // values in [0, 9]

    index_t size() const { return images.rows(); }

    Dataset<S> take(const std::vector<index_t>& idx) const {
        Dataset<S> out;
        out.images = Tensor<S>(static_cast<index_t>(idx.size()), images.cols());
        out.labels.reserve(idx.size());
        index_t r = 0;
        for (index_t i : idx) {
            for (index_t j = 0; j < images.cols(); ++j) out.images(r, j) = images(i, j);
            out.labels.push_back(labels[static_cast<std::size_t>(i)]);
            ++r;
        }
        return out;
    }

    Dataset<S> head(index_t n) const {
        std::vector<index_t> idx(static_cast<std::size_t>(n));
        for (index_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        return take(idx);
    }
};

namespace idx {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

/// Whole file into memory, transparently inflating gzip containers.
inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) {
        z_stream zs{};
        if (inflateInit2(&zs, 15 + 32) != Z_OK)
            throw io_error("zlib init failed for " + path);
        std::vector<unsigned char> out;
        std::vector<unsigned char> buf(1 << 16);
        zs.next_in = raw.data();
        zs.avail_in = static_cast<uInt>(raw.size());
        int rc = Z_OK;
        while (rc != Z_STREAM_END) {
            zs.next_out = buf.data();
            zs.avail_out = static_cast<uInt>(buf.size());
            rc = inflate(&zs, Z_NO_FLUSH);
            if (rc != Z_OK && rc != Z_STREAM_END) {
                inflateEnd(&zs);
                throw io_error("corrupt gzip stream in " + path);
            }
            out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
        }
        inflateEnd(&zs);
        return out;
    }
    return raw;
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off,
                               const std::string& path) {
    if (off + 4 > b.size())
        throw io_error(path + ": truncated at offset " + std::to_string(off));
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace idx

/// Reads an IDX image file (big-endian magic 0x00000803, dims n x 28 x 28),
/// flattens to n x 784 and scales bytes by 1/255.
template <typename S>
Tensor<S> load_idx_images(const std::string& path) {
    const auto bytes = idx::read_file(path);
    const auto magic = idx::read_be32(bytes, 0, path);
    if (magic != idx::kImageMagic)
        throw io_error(path + ": bad image magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", magic);
            return std::string(buf);
        }() + " at offset 0");
    const auto n = idx::read_be32(bytes, 4, path);
    const auto rows = idx::read_be32(bytes, 8, path);
    const auto cols = idx::read_be32(bytes, 12, path);
    const std::size_t expect = 16 + std::size_t(n) * rows * cols;
    if (bytes.size() != expect)
        throw io_error(path + ": expected " + std::to_string(expect) + " bytes, got " +
                       std::to_string(bytes.size()));
    Tensor<S> images(static_cast<index_t>(n), static_cast<index_t>(rows) * cols);
    const S scale = S(1) / S(255);
    for (index_t i = 0; i < images.size(); ++i)
        images.data()[i] = scale * static_cast<S>(bytes[16 + static_cast<std::size_t>(i)]);
    return images;
}

/// Reads an IDX label file (magic 0x00000801); every value must be in [0, 9].
inline std::vector<int> load_idx_labels(const std::string& path) {
    const auto bytes = idx::read_file(path);
    const auto magic = idx::read_be32(bytes, 0, path);
    if (magic != idx::kLabelMagic)
        throw io_error(path + ": bad label magic at offset 0");
    const auto n = idx::read_be32(bytes, 4, path);
    if (bytes.size() != 8 + std::size_t(n))
        throw io_error(path + ": expected " + std::to_string(8 + std::size_t(n)) +
                       " bytes, got " + std::to_string(bytes.size()));
    std::vector<int> labels(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const int v = bytes[8 + i];
        if (v > 9)
            throw io_error(path + ": label " + std::to_string(v) + " out of range at index " +
                           std::to_string(i));
        labels[i] = v;
    }
    return labels;
}

/// Writes pixels back to IDX bytes (inverse of the 1/255 scaling).
template <typename S>
void save_idx_images(const std::string& path, const Tensor<S>& images, index_t side = 28) {
    if (images.cols() != side * side)
        throw shape_error("save_idx_images: " + images.shape() + " is not " +
                          std::to_string(side) + "x" + std::to_string(side) + " images");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    idx::write_be32(out, idx::kImageMagic);
    idx::write_be32(out, static_cast<std::uint32_t>(images.rows()));
    idx::write_be32(out, static_cast<std::uint32_t>(side));
    idx::write_be32(out, static_cast<std::uint32_t>(side));
    std::vector<unsigned char> bytes(static_cast<std::size_t>(images.size()));
    for (index_t i = 0; i < images.size(); ++i) {
        const double v = static_cast<double>(images.data()[i]) * 255.0;
        bytes[static_cast<std::size_t>(i)] =
            static_cast<unsigned char>(std::lround(std::min(255.0, std::max(0.0, v))));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void save_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    idx::write_be32(out, idx::kLabelMagic);
    idx::write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int v : labels) out.put(static_cast<char>(v));
}

/// Loads a paired image/label file set and checks consistency.
template <typename S>
Dataset<S> load_dataset(const std::string& image_path, const std::string& label_path) {
    Dataset<S> d;
    d.images = load_idx_images<S>(image_path);
    d.labels = load_idx_labels(label_path);
    if (d.images.rows() != static_cast<index_t>(d.labels.size()))
        throw io_error("image/label count mismatch: " + std::to_string(d.images.rows()) + " vs " +
                       std::to_string(d.labels.size()));
    return d;
}

struct SplitSpec {
    index_t train_count = 50000;
    index_t valid_count = 10000;
    std::uint64_t seed = 0;
};

/// Seed-deterministic disjoint split; with the canonical 50000/10000 counts it
/// is exhaustive over the 60000-sample source set.
template <typename S>
std::pair<Dataset<S>, Dataset<S>> split(const Dataset<S>& data, const SplitSpec& spec) {
    if (spec.train_count + spec.valid_count > data.size())
        throw value_error("split: " + std::to_string(spec.train_count) + "+" +
                          std::to_string(spec.valid_count) + " exceeds dataset size " +
                          std::to_string(data.size()));
    Rng rng(spec.seed);
    const auto perm = permutation(rng, data.size());
    std::vector<index_t> train_idx(perm.begin(), perm.begin() + spec.train_count);
    std::vector<index_t> valid_idx(perm.begin() + spec.train_count,
                                   perm.begin() + spec.train_count + spec.valid_count);
    return {data.take(train_idx), data.take(valid_idx)};
}

/// One epoch of shuffled minibatches. The shuffle is drawn from the supplied
/// stream, so identical epoch seeds reproduce identical batch order. A final
/// short batch is dropped (batch statistics need full batches).
template <typename S>
class Minibatches {
public:
    Minibatches(const Dataset<S>& data, index_t batch_size, Rng& rng) : data_(&data), batch_(batch_size) {
        if (batch_size < 2)
            throw value_error("minibatches: batch size must be >= 2 for batch statistics, got " +
                              std::to_string(batch_size));
        order_ = permutation(rng, data.size());
        count_ = data.size() / batch_size;
    }

    index_t count() const { return count_; }

    std::pair<Tensor<S>, std::vector<int>> batch(index_t k) const {
        Tensor<S> x(batch_, data_->images.cols());
        std::vector<int> labels(static_cast<std::size_t>(batch_));
        for (index_t r = 0; r < batch_; ++r) {
            const index_t src = order_[static_cast<std::size_t>(k * batch_ + r)];
            for (index_t j = 0; j < x.cols(); ++j) x(r, j) = data_->images(src, j);
            labels[static_cast<std::size_t>(r)] = data_->labels[static_cast<std::size_t>(src)];
        }
        return {std::move(x), std::move(labels)};
    }

private:
    const Dataset<S>* data_;
    index_t batch_;
    index_t count_;
    std::vector<index_t> order_;
};

} // namespace ladder
