#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ladder/checkpoint.hpp"
#include "ladder/errors.hpp"
#include "ladder/gradcheck.hpp"
#include "ladder/mnist.hpp"
#include "ladder/model.hpp"
#include "ladder/optimizer.hpp"
#include "ladder/random.hpp"
#include "ladder/synth.hpp"

namespace ladder {

enum class Precision { f32, f64 };

/// Full experiment description. The defaults reproduce the reference MNIST
/// protocol: 784-1000-500-250-250-250-10, eta 500, input noise 0.3, 100
/// epochs of minibatch 100 (50000 weight updates on the 50000/10000 split),
/// Adam at 0.002 with a linear ramp to zero over the last 50 epochs.
struct TrainConfig {
    std::vector<index_t> layer_sizes = {784, 1000, 500, 250, 250, 250, 10};
    double eta = 500.0;
    double input_noise_sigma = 0.3;
    int epochs = 100;
    index_t batch_size = 100;
    double base_lr = 0.002;
    int decay_start_epoch = 50;
    std::uint64_t seed = 1;
    index_t train_count = 50000;
    index_t valid_count = 10000;
    bool use_full_train = false; // train on all 60000, report against the test files
    Precision precision = Precision::f64;
    std::string data_dir;        // empty: $LADDER_MNIST_DIR
    std::string metrics_path;    // JSON-lines, one record per epoch
    std::string checkpoint_path; // final model
    std::string resume_path;     // continue a checkpointed run at its epoch boundary
    index_t synthetic_count = 0; // > 0: generated digits instead of dataset files
    bool ablate_decoder = false; // drop the decoder entirely (requires eta == 0)
    bool quiet = false;
};

/// One row per epoch; feeds the metrics file and the sweep table.
struct MetricsRecord {
    int epoch = 0;
    double train_cost = 0;
    double train_class_cost = 0;
    double train_reconst_cost = 0;
    double val_error_pct = 0; // NaN when no held-out set exists
    double val_cost = 0;
    double lr = 0;
    double seconds = 0;
};

inline nlohmann::ordered_json metrics_to_json(const MetricsRecord& r) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["train_cost"] = r.train_cost;
    j["train_class_cost"] = r.train_class_cost;
    j["train_reconst_cost"] = r.train_reconst_cost;
    if (std::isfinite(r.val_error_pct)) {
        j["val_error_pct"] = r.val_error_pct;
        j["val_cost"] = r.val_cost;
    } else {
        j["val_error_pct"] = nullptr;
        j["val_cost"] = nullptr;
    }
    j["lr"] = r.lr;
    j["seconds"] = r.seconds;
    return j;
}

namespace seeds {
// Fixed stream ids: each randomness source (init, split, per-epoch shuffle,
// per-epoch noise, synthetic data) derives independently from the master
// seed, so ablations change exactly one source.
constexpr std::uint64_t kInit = 0x696e6974;    // "init"
constexpr std::uint64_t kSplit = 0x73706c69;   // "spli"
constexpr std::uint64_t kShuffle = 0x73687566; // "shuf"
constexpr std::uint64_t kNoise = 0x6e6f6973;   // "nois"
constexpr std::uint64_t kData = 0x64617461;    // "data"
} // namespace seeds

inline std::string dataset_dir(const TrainConfig& cfg) {
    if (!cfg.data_dir.empty()) return cfg.data_dir;
    if (const char* env = std::getenv("LADDER_MNIST_DIR")) return env;
    return ".";
}

/// Resolves a canonical dataset file, preferring the uncompressed name and
/// falling back to the .gz variant.
inline std::string resolve_idx_file(const std::string& dir, const std::string& base) {
    namespace fs = std::filesystem;
    const fs::path plain = fs::path(dir) / base;
    if (fs::exists(plain)) return plain.string();
    const fs::path gz = fs::path(dir) / (base + ".gz");
    if (fs::exists(gz)) return gz.string();
    throw io_error("dataset file not found: " + plain.string() + "[.gz]");
}

template <typename S>
struct TrainData {
    Dataset<S> train;
    Dataset<S> valid; // empty when no held-out set exists
    bool has_valid = false;
};

template <typename S>
TrainData<S> prepare_data(const TrainConfig& cfg) {
    TrainData<S> out;
    Rng master(cfg.seed);
    if (cfg.synthetic_count > 0) {
        Dataset<S> source = synthetic_digits<S>(master.split(seeds::kData).seed(), cfg.synthetic_count);
        SplitSpec spec{cfg.train_count, cfg.valid_count, master.split(seeds::kSplit).seed()};
        auto [train, valid] = split(source, spec);
        out.train = std::move(train);
        out.valid = std::move(valid);
        out.has_valid = out.valid.size() > 0;
        return out;
    }
    const std::string dir = dataset_dir(cfg);
    Dataset<S> source = load_dataset<S>(resolve_idx_file(dir, "train-images-idx3-ubyte"),
                                        resolve_idx_file(dir, "train-labels-idx1-ubyte"));
    if (cfg.use_full_train) {
        out.train = std::move(source);
        try {
            out.valid = load_dataset<S>(resolve_idx_file(dir, "t10k-images-idx3-ubyte"),
                                        resolve_idx_file(dir, "t10k-labels-idx1-ubyte"));
            out.has_valid = true;
        } catch (const io_error&) {
            out.has_valid = false; // train-only run; metrics carry null held-out columns
        }
        return out;
    }
    SplitSpec spec{cfg.train_count, cfg.valid_count, master.split(seeds::kSplit).seed()};
    auto [train, valid] = split(source, spec);
    out.train = std::move(train);
    out.valid = std::move(valid);
    out.has_valid = out.valid.size() > 0;
    return out;
}

struct EvalResult {
    double error_pct = 0;
    double class_cost = 0;
    double reconst_cost = 0;
};

/// Noise-free forward in inference mode, chunked so large sets stay cheap.
/// Argmax ties break toward the lowest class index. Never mutates the model.
template <typename S>
EvalResult evaluate_dataset(const LadderNetwork<S>& net, const Dataset<S>& data,
                            bool with_decoder = true, index_t chunk_rows = 1000) {
    auto& mutable_net = const_cast<LadderNetwork<S>&>(net); // inference mode leaves state alone
    Rng unused(0);
    index_t wrong = 0;
    double class_cost = 0, reconst_cost = 0;
    const index_t n = data.size();
    for (index_t start = 0; start < n; start += chunk_rows) {
        const index_t rows = std::min(chunk_rows, n - start);
        Tensor<S> x(rows, data.images.cols());
        std::vector<int> labels(static_cast<std::size_t>(rows));
        for (index_t r = 0; r < rows; ++r) {
            for (index_t j = 0; j < x.cols(); ++j) x(r, j) = data.images(start + r, j);
            labels[static_cast<std::size_t>(r)] = data.labels[static_cast<std::size_t>(start + r)];
        }
        auto trace = encoder_forward(mutable_net, x, unused, Mode::inference);
        if (with_decoder) {
            decoder_forward(mutable_net, trace);
            reconst_cost += static_cast<double>(mse_cost(trace.xhat(), trace.x)) * rows;
        }
        class_cost += static_cast<double>(cross_entropy(trace.y(), labels)) * rows;
        const auto& y = trace.y();
        for (index_t r = 0; r < rows; ++r) {
            index_t best = 0;
            for (index_t j = 1; j < y.cols(); ++j)
                if (y(r, j) > y(r, best)) best = j;
            if (best != labels[static_cast<std::size_t>(r)]) ++wrong;
        }
    }
    EvalResult res;
    res.error_pct = 100.0 * static_cast<double>(wrong) / static_cast<double>(n);
    res.class_cost = class_cost / static_cast<double>(n);
    res.reconst_cost = reconst_cost / static_cast<double>(n);
    return res;
}

template <typename S>
struct TrainOutcome {
    LadderNetwork<S> net;
    AdamState<S> adam;
    std::vector<MetricsRecord> metrics;
    double final_val_error_pct = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t noise_rng_state = 0;
};

inline void validate(const TrainConfig& cfg) {
    if (cfg.epochs <= 0) throw value_error("config: epochs must be positive");
    if (cfg.batch_size < 2) throw value_error("config: batch size must be >= 2 for batch statistics");
    if (cfg.eta < 0) throw value_error("config: eta must be >= 0");
    if (cfg.input_noise_sigma < 0) throw value_error("config: input noise sigma must be >= 0");
    if (cfg.decay_start_epoch < 0 || cfg.decay_start_epoch > cfg.epochs)
        throw value_error("config: decay_start_epoch outside [0, epochs]");
    if (cfg.layer_sizes.size() < 2) throw value_error("config: need at least two layer sizes");
    if (cfg.ablate_decoder && cfg.eta != 0)
        throw value_error("config: ablate_decoder requires eta == 0");
}

/// Core loop over epochs of shuffled minibatches:
/// corrupt -> encode -> decode -> cost -> backward -> Adam. Evaluates the
/// held-out set after every epoch. The callback (epoch record, net) may
/// return false to stop early. Resuming from a checkpoint at an epoch
/// boundary replays exactly the stream an uninterrupted run would use.
template <typename S, typename Callback>
TrainOutcome<S> train_with_data(const TrainConfig& cfg, const TrainData<S>& data, Callback&& cb,
                                const Checkpoint<S>* resume = nullptr) {
    validate(cfg);
    if (data.train.size() < cfg.batch_size)
        throw value_error("training set smaller than one batch");

    Rng master(cfg.seed);
    Rng init_rng = master.split(seeds::kInit);
    Rng shuffle_base = master.split(seeds::kShuffle);
    Rng noise_base = master.split(seeds::kNoise);

    auto net = init_params<S>(cfg.layer_sizes, init_rng, static_cast<S>(cfg.input_noise_sigma),
                              static_cast<S>(cfg.eta));
    AdamState<S> adam(net);
    int start_epoch = 0;
    if (resume) {
        if (resume->net.layer_sizes != net.layer_sizes)
            throw value_error("resume: checkpoint layer sizes do not match the configuration");
        net = resume->net;
        if (resume->adam) adam = *resume->adam;
        start_epoch = static_cast<int>(resume->epochs_completed);
    }

    const LrSchedule schedule{cfg.base_lr, cfg.epochs, cfg.decay_start_epoch};
    const S eta = static_cast<S>(cfg.eta);

    TrainOutcome<S> outcome{std::move(net), std::move(adam), {},
                            std::numeric_limits<double>::quiet_NaN(), 0};

    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_at(schedule, epoch);
        Rng shuffle_rng = shuffle_base.split(static_cast<std::uint64_t>(epoch));
        Rng noise_rng = noise_base.split(static_cast<std::uint64_t>(epoch));
        Minibatches<S> batches(data.train, cfg.batch_size, shuffle_rng);

        double cost_sum = 0, class_sum = 0, reconst_sum = 0;
        for (index_t k = 0; k < batches.count(); ++k) {
            auto [x, labels] = batches.batch(k);
            try {
                auto trace = encoder_forward(outcome.net, x, noise_rng, Mode::training);
                if (!cfg.ablate_decoder) decoder_forward(outcome.net, trace);
                const auto costs = total_cost(trace, labels, eta);
                if (!std::isfinite(costs.total))
                    throw numeric_error("non-finite training cost");
                cost_sum += static_cast<double>(costs.total);
                class_sum += static_cast<double>(costs.classification);
                reconst_sum += static_cast<double>(costs.reconstruction);
                auto grads = backward(outcome.net, trace, labels, eta);
                adam_step(outcome.net, grads, outcome.adam, static_cast<S>(lr));
            } catch (const numeric_error& e) {
                throw numeric_error(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(k) + ")");
            }
        }
        outcome.noise_rng_state = noise_rng.state();

        MetricsRecord rec;
        rec.epoch = epoch;
        const auto nb = static_cast<double>(batches.count());
        rec.train_cost = cost_sum / nb;
        rec.train_class_cost = class_sum / nb;
        rec.train_reconst_cost = reconst_sum / nb;
        rec.lr = lr;
        if (data.has_valid) {
            const auto ev = evaluate_dataset(outcome.net, data.valid, !cfg.ablate_decoder);
            rec.val_error_pct = ev.error_pct;
            rec.val_cost = ev.class_cost + cfg.eta * ev.reconst_cost;
            outcome.final_val_error_pct = ev.error_pct;
        } else {
            rec.val_error_pct = std::numeric_limits<double>::quiet_NaN();
            rec.val_cost = std::numeric_limits<double>::quiet_NaN();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        outcome.metrics.push_back(rec);

        if constexpr (!std::is_same_v<std::decay_t<Callback>, std::nullptr_t>) {
            if (!cb(rec, outcome.net)) break;
        }
    }
    return outcome;
}

template <typename S>
TrainOutcome<S> train_with_data(const TrainConfig& cfg, const TrainData<S>& data) {
    return train_with_data<S>(cfg, data, nullptr);
}

/// File-emitting wrapper: loads data, runs the loop, writes the JSON-lines
/// metrics (one record per epoch plus a summary line) and the final
/// checkpoint with optimizer state.
template <typename S>
TrainOutcome<S> train(const TrainConfig& cfg) {
    const TrainData<S> data = prepare_data<S>(cfg);

    std::optional<Checkpoint<S>> resume;
    if (!cfg.resume_path.empty()) resume = load_checkpoint<S>(cfg.resume_path);

    std::ofstream metrics_out;
    if (!cfg.metrics_path.empty()) {
        metrics_out.open(cfg.metrics_path, std::ios::trunc);
        if (!metrics_out) throw io_error("cannot write " + cfg.metrics_path);
    }

    auto emit = [&](const MetricsRecord& rec, LadderNetwork<S>&) {
        if (metrics_out.is_open()) {
            metrics_out << metrics_to_json(rec).dump() << "\n";
            metrics_out.flush();
        }
        if (!cfg.quiet) {
            std::cout << "epoch " << rec.epoch << "  C " << rec.train_cost << "  C_class "
                      << rec.train_class_cost << "  C_reconst " << rec.train_reconst_cost;
            if (std::isfinite(rec.val_error_pct))
                std::cout << "  held-out error " << rec.val_error_pct << "%";
            std::cout << "  lr " << rec.lr << "\n";
        }
        return true;
    };
    auto outcome = train_with_data<S>(cfg, data, emit, resume ? &*resume : nullptr);

    if (metrics_out.is_open()) {
        nlohmann::ordered_json summary;
        summary["summary"] = true;
        summary["epochs"] = cfg.epochs;
        summary["weight_updates"] = outcome.adam.t;
        summary["eta"] = cfg.eta;
        summary["final_val_error_pct"] =
            std::isfinite(outcome.final_val_error_pct)
                ? nlohmann::ordered_json(outcome.final_val_error_pct)
                : nlohmann::ordered_json(nullptr);
        summary["held_out"] = cfg.use_full_train ? "test" : "validation";
        metrics_out << summary.dump() << "\n";
    }

    if (!cfg.checkpoint_path.empty()) {
        Checkpoint<S> ck;
        ck.net = outcome.net;
        ck.master_seed = cfg.seed;
        ck.rng_state = outcome.noise_rng_state;
        ck.epochs_completed = static_cast<std::uint64_t>(cfg.epochs);
        ck.adam = outcome.adam;
        save_checkpoint(cfg.checkpoint_path, ck);
    }
    return outcome;
}

/// Mean and sample standard deviation of the held-out error across seeds,
/// one row per eta.
struct SweepRow {
    double eta = 0;
    double mean_error_pct = 0;
    double stdev_error_pct = 0;
    std::vector<double> run_errors;
};

template <typename S>
std::vector<SweepRow> eta_sweep(const TrainConfig& base, const std::vector<double>& etas,
                                int n_seeds) {
    if (etas.empty()) throw value_error("eta_sweep: empty eta list");
    if (n_seeds < 1) throw value_error("eta_sweep: need at least one seed");
    std::vector<SweepRow> rows;
    for (double eta : etas) {
        SweepRow row;
        row.eta = eta;
        for (int s = 0; s < n_seeds; ++s) {
            TrainConfig cfg = base;
            cfg.eta = eta;
            cfg.seed = base.seed + static_cast<std::uint64_t>(s);
            cfg.metrics_path.clear();
            cfg.checkpoint_path.clear();
            cfg.ablate_decoder = false;
            const auto data = prepare_data<S>(cfg);
            auto outcome = train_with_data<S>(cfg, data);
            row.run_errors.push_back(outcome.final_val_error_pct);
        }
        double mean = 0;
        for (double e : row.run_errors) mean += e;
        mean /= static_cast<double>(row.run_errors.size());
        double ss = 0;
        for (double e : row.run_errors) ss += (e - mean) * (e - mean);
        row.mean_error_pct = mean;
        row.stdev_error_pct = row.run_errors.size() > 1
                                  ? std::sqrt(ss / static_cast<double>(row.run_errors.size() - 1))
                                  : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::ordered_json sweep_to_json(const std::vector<SweepRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["eta"] = r.eta;
        j["mean_val_error_pct"] = r.mean_error_pct;
        j["stdev_val_error_pct"] = r.stdev_error_pct;
        j["run_errors"] = r.run_errors;
        arr.push_back(std::move(j));
    }
    return arr;
}

/// Applies the desk-scale preset: a pared-down configuration for quick local
/// runs. Not the reference protocol: smaller net, fewer epochs, less data,
/// 32-bit floats.
inline void apply_desk_preset(TrainConfig& cfg) {
    cfg.layer_sizes = {784, 500, 250, 10};
    cfg.epochs = 20;
    cfg.decay_start_epoch = 10;
    cfg.train_count = 10000;
    cfg.valid_count = 5000;
    cfg.precision = Precision::f32;
}

} // namespace ladder
