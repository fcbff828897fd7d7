#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ladder/checkpoint.hpp"
#include "ladder/gradcheck.hpp"
#include "ladder/plot.hpp"
#include "ladder/train.hpp"

using ladder::index_t;
using ladder::TrainConfig;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

TrainConfig tiny_config(std::uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.layer_sizes = {784, 16, 10};
    cfg.synthetic_count = 140;
    cfg.train_count = 100;
    cfg.valid_count = 40;
    cfg.epochs = 3;
    cfg.batch_size = 20;
    cfg.decay_start_epoch = 1;
    cfg.seed = seed;
    cfg.eta = 1.0;
    cfg.quiet = true;
    return cfg;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Metrics lines with the wall-clock column dropped; everything else must be
/// byte-identical across reruns.
std::string metrics_without_timing(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        auto j = nlohmann::ordered_json::parse(line);
        j.erase("seconds");
        out << j.dump() << "\n";
    }
    return out.str();
}

std::vector<double> param_snapshot(ladder::LadderNetwork<double>& net) {
    std::vector<double> out;
    for_each_param(net, [&](const ladder::ParamRef<double>& p) {
        out.insert(out.end(), p.values, p.values + p.count);
    });
    return out;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("one record per epoch with the scheduled learning rate") {
    auto cfg = tiny_config();
    const auto data = ladder::prepare_data<double>(cfg);
    auto outcome = ladder::train_with_data<double>(cfg, data);
    REQUIRE(outcome.metrics.size() == 3);
    const ladder::LrSchedule sched{cfg.base_lr, cfg.epochs, cfg.decay_start_epoch};
    for (int e = 0; e < 3; ++e) {
        CHECK(outcome.metrics[static_cast<std::size_t>(e)].epoch == e);
        CHECK(outcome.metrics[static_cast<std::size_t>(e)].lr == lr_at(sched, e));
    }
    // 100 samples / batch 20 = 5 updates per epoch.
    CHECK(outcome.adam.t == 15);
}

TEST_CASE("reported cost at eta zero equals the classification cost exactly") {
    auto cfg = tiny_config();
    cfg.eta = 0.0;
    const auto data = ladder::prepare_data<double>(cfg);
    auto outcome = ladder::train_with_data<double>(cfg, data);
    for (const auto& rec : outcome.metrics) {
        CHECK(rec.train_cost == rec.train_class_cost);
        CHECK(rec.train_reconst_cost > 0.0); // still reported, just unweighted
    }
}

TEST_CASE("identical configs produce identical metrics and checkpoints") {
    auto cfg = tiny_config(9);
    cfg.metrics_path = temp_path("ladder_m1.jsonl");
    cfg.checkpoint_path = temp_path("ladder_m1.ckpt");
    ladder::train<double>(cfg);
    const auto metrics_a = metrics_without_timing(cfg.metrics_path);
    const auto ckpt_a = file_bytes(cfg.checkpoint_path);

    cfg.metrics_path = temp_path("ladder_m2.jsonl");
    cfg.checkpoint_path = temp_path("ladder_m2.ckpt");
    ladder::train<double>(cfg);
    CHECK(metrics_without_timing(cfg.metrics_path) == metrics_a);
    CHECK(file_bytes(cfg.checkpoint_path) == ckpt_a);

    cfg.seed = 10;
    cfg.metrics_path = temp_path("ladder_m3.jsonl");
    cfg.checkpoint_path = temp_path("ladder_m3.ckpt");
    ladder::train<double>(cfg);
    CHECK(metrics_without_timing(cfg.metrics_path) != metrics_a);
}

TEST_CASE("eta zero trajectory matches the decoder-ablated classifier bit-exactly") {
    auto cfg = tiny_config(4);
    cfg.eta = 0.0;
    cfg.epochs = 5;
    const auto data = ladder::prepare_data<double>(cfg);
    auto full = ladder::train_with_data<double>(cfg, data);

    auto ablated_cfg = cfg;
    ablated_cfg.ablate_decoder = true;
    auto ablated = ladder::train_with_data<double>(ablated_cfg, data);

    REQUIRE(full.metrics.size() == ablated.metrics.size());
    for (std::size_t e = 0; e < full.metrics.size(); ++e) {
        CHECK(full.metrics[e].val_error_pct == ablated.metrics[e].val_error_pct);
        CHECK(full.metrics[e].train_class_cost == ablated.metrics[e].train_class_cost);
    }
    CHECK(param_snapshot(full.net) == param_snapshot(ablated.net));
}

TEST_CASE("resuming from a checkpoint matches the uninterrupted run") {
    auto cfg = tiny_config(12);
    cfg.epochs = 4;
    cfg.checkpoint_path = temp_path("ladder_full.ckpt");
    ladder::train<double>(cfg);
    const auto full_bytes = file_bytes(cfg.checkpoint_path);

    auto head = cfg;
    head.epochs = 2;
    head.checkpoint_path = temp_path("ladder_head.ckpt");
    ladder::train<double>(head);

    auto tail = cfg;
    tail.epochs = 4;
    tail.resume_path = head.checkpoint_path;
    tail.checkpoint_path = temp_path("ladder_tail.ckpt");
    ladder::train<double>(tail);
    CHECK(file_bytes(tail.checkpoint_path) == full_bytes);
}

TEST_CASE("uniform predictor errs on exactly the non-zero-label fraction") {
    ladder::Rng rng(3);
    auto net = ladder::init_params<double>({784, 10}, rng, 0.0, 0.0);
    for (index_t i = 0; i < net.enc(1).W.size(); ++i) net.enc(1).W.data()[i] = 0.0;
    auto data = ladder::synthetic_digits<double>(8, 50); // 5 of each class
    const auto res = ladder::evaluate_dataset(net, data, false);
    CHECK(res.error_pct == doctest::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("targets set to the model's own argmax evaluate to zero error") {
    ladder::Rng rng(21);
    auto net = ladder::init_params<double>({784, 12, 10}, rng, 0.0, 0.0);
    auto data = ladder::synthetic_digits<double>(5, 64);
    ladder::Rng unused(0);
    auto trace = encoder_forward(net, data.images, unused, ladder::Mode::inference);
    for (index_t i = 0; i < trace.y().rows(); ++i) {
        index_t best = 0;
        for (index_t j = 1; j < trace.y().cols(); ++j)
            if (trace.y()(i, j) > trace.y()(i, best)) best = j;
        data.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    CHECK(ladder::evaluate_dataset(net, data).error_pct == 0.0);
}

TEST_CASE("evaluation leaves the model untouched") {
    auto cfg = tiny_config(31);
    const auto data = ladder::prepare_data<double>(cfg);
    auto outcome = ladder::train_with_data<double>(cfg, data);
    const auto before = param_snapshot(outcome.net);
    std::vector<double> bn_before;
    for (auto& e : outcome.net.encoder) {
        bn_before.insert(bn_before.end(), e.bn.running_mean.data(),
                         e.bn.running_mean.data() + e.bn.running_mean.size());
        bn_before.insert(bn_before.end(), e.bn.running_var.data(),
                         e.bn.running_var.data() + e.bn.running_var.size());
    }
    ladder::evaluate_dataset(outcome.net, data.valid);
    CHECK(param_snapshot(outcome.net) == before);
    std::vector<double> bn_after;
    for (auto& e : outcome.net.encoder) {
        bn_after.insert(bn_after.end(), e.bn.running_mean.data(),
                        e.bn.running_mean.data() + e.bn.running_mean.size());
        bn_after.insert(bn_after.end(), e.bn.running_var.data(),
                        e.bn.running_var.data() + e.bn.running_var.size());
    }
    CHECK(bn_after == bn_before);
}

TEST_CASE("gradcheck flags a corrupted gradient") {
    ladder::Rng rng(2);
    auto net = ladder::init_params<double>({6, 5, 4, 3}, rng, 0.0, 1.0);
    ladder::Rng data_rng(3);
    auto x = ladder::gaussian<double>(data_rng, 5, 6, 1.0);
    std::vector<int> targets = {0, 1, 2, 1, 0};
    ladder::Rng unused(0);
    auto trace = encoder_forward(net, x, unused, ladder::Mode::training);
    decoder_forward(net, trace);
    auto grads = backward(net, trace, targets, 1.0);

    auto clean = ladder::gradcheck_against(net, grads, x, targets, 1.0, 1e-5, 1e-4);
    CHECK(clean.passed);

    // Negate one term of one weight gradient: the checker must notice.
    grads.W[1](0, 0) = -grads.W[1](0, 0);
    auto corrupted = ladder::gradcheck_against(net, grads, x, targets, 1.0, 1e-5, 1e-4);
    CHECK_FALSE(corrupted.passed);
}

TEST_CASE("sweep emits one row per eta with sane aggregates") {
    auto cfg = tiny_config(5);
    cfg.epochs = 2;
    const auto rows = ladder::eta_sweep<double>(cfg, {0.0, 2.0}, 2);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.run_errors.size() == 2);
        CHECK(std::isfinite(r.mean_error_pct));
        CHECK(r.stdev_error_pct >= 0.0);
    }
    CHECK(rows[0].eta == 0.0);

    const auto svg_path = temp_path("ladder_sweep.svg");
    ladder::write_sweep_svg(svg_path, rows);
    const auto svg = file_bytes(svg_path);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("held-out error") != std::string::npos);
}

TEST_CASE("config validation rejects nonsense") {
    auto cfg = tiny_config();
    cfg.batch_size = 1;
    CHECK_THROWS_AS(ladder::validate(cfg), ladder::value_error);
    cfg = tiny_config();
    cfg.eta = -1;
    CHECK_THROWS_AS(ladder::validate(cfg), ladder::value_error);
    cfg = tiny_config();
    cfg.decay_start_epoch = 99;
    CHECK_THROWS_AS(ladder::validate(cfg), ladder::value_error);
    cfg = tiny_config();
    cfg.ablate_decoder = true; // eta != 0
    CHECK_THROWS_AS(ladder::validate(cfg), ladder::value_error);
}

TEST_CASE("float instantiation trains deterministically") {
    auto cfg = tiny_config(6);
    cfg.precision = ladder::Precision::f32;
    const auto data = ladder::prepare_data<float>(cfg);
    auto a = ladder::train_with_data<float>(cfg, data);
    auto b = ladder::train_with_data<float>(cfg, data);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        CHECK(a.metrics[i].train_cost == b.metrics[i].train_cost);
        CHECK(a.metrics[i].val_error_pct == b.metrics[i].val_error_pct);
    }
}

} // TEST_SUITE
