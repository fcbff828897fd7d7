// Command-line harness: train, evaluate, sweep, gradcheck, plot.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ladder/ladder.hpp"

namespace {

struct CliOptions {
    ladder::TrainConfig cfg;
    std::string precision = "f64";
    std::vector<ladder::index_t> layer_sizes;
    bool desk_preset = false;
};

void add_train_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--layer-sizes", opt.layer_sizes,
                    "Layer widths d0..dL (default 784,1000,500,250,250,250,10)")
        ->delimiter(',');
    cmd->add_option("--eta", opt.cfg.eta, "Auxiliary reconstruction cost multiplier")->capture_default_str();
    cmd->add_option("--input-noise-sigma", opt.cfg.input_noise_sigma,
                    "Stdev of the Gaussian input corruption")->capture_default_str();
    cmd->add_option("--epochs", opt.cfg.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", opt.cfg.batch_size, "Minibatch size (>= 2)")->capture_default_str();
    cmd->add_option("--base-lr", opt.cfg.base_lr, "Adam learning rate before the decay ramp")->capture_default_str();
    cmd->add_option("--decay-start-epoch", opt.cfg.decay_start_epoch,
                    "First epoch of the linear ramp to zero")->capture_default_str();
    cmd->add_option("--seed", opt.cfg.seed, "Master seed; every randomness source derives from it",
                    true);
    cmd->add_option("--train-count", opt.cfg.train_count, "Training split size")->capture_default_str();
    cmd->add_option("--valid-count", opt.cfg.valid_count, "Validation split size")->capture_default_str();
    cmd->add_flag("--use-full-train", opt.cfg.use_full_train,
                  "Train on all 60000 samples; held-out metrics use the test files");
    cmd->add_option("--precision", opt.precision, "Float width: f32 or f64 (default f64)")
        ->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_option("--data-dir", opt.cfg.data_dir,
                    "Directory with the IDX files (default $LADDER_MNIST_DIR)");
    cmd->add_option("--metrics", opt.cfg.metrics_path, "JSON-lines metrics output path");
    cmd->add_option("--checkpoint", opt.cfg.checkpoint_path, "Final checkpoint output path");
    cmd->add_option("--resume", opt.cfg.resume_path, "Resume from a checkpoint (epoch boundary)");
    cmd->add_option("--synthetic-count", opt.cfg.synthetic_count,
                    "Generate this many deterministic synthetic digits instead of reading files");
    cmd->add_flag("--ablate-decoder", opt.cfg.ablate_decoder,
                  "Drop the decoder path entirely (requires --eta 0)");
    cmd->add_flag("--quiet", opt.cfg.quiet, "No per-epoch console output");
    cmd->add_flag("--preset-desk", opt.desk_preset,
                  "Desk-scale preset: 784-500-250-10, 20 epochs, 10000/5000 split, f32. "
                  "Not the reference protocol; flags given alongside still override.");
}

void finalize(CliOptions& opt) {
    if (opt.desk_preset) {
        ladder::TrainConfig base;
        ladder::apply_desk_preset(base);
        ladder::TrainConfig defaults;
        // Only fields the user left at their defaults pick up preset values.
        if (opt.layer_sizes.empty()) opt.layer_sizes = base.layer_sizes;
        if (opt.cfg.epochs == defaults.epochs) opt.cfg.epochs = base.epochs;
        if (opt.cfg.decay_start_epoch == defaults.decay_start_epoch)
            opt.cfg.decay_start_epoch = base.decay_start_epoch;
        if (opt.cfg.train_count == defaults.train_count) opt.cfg.train_count = base.train_count;
        if (opt.cfg.valid_count == defaults.valid_count) opt.cfg.valid_count = base.valid_count;
        if (opt.precision == "f64") opt.precision = "f32";
    }
    if (!opt.layer_sizes.empty()) opt.cfg.layer_sizes = opt.layer_sizes;
    opt.cfg.precision = opt.precision == "f32" ? ladder::Precision::f32 : ladder::Precision::f64;
}

template <typename S>
int run_train(const ladder::TrainConfig& cfg) {
    auto outcome = ladder::train<S>(cfg);
    if (std::isfinite(outcome.final_val_error_pct))
        std::cout << "final held-out error: " << outcome.final_val_error_pct << "%\n";
    std::cout << "weight updates: " << outcome.adam.t << "\n";
    return 0;
}

template <typename S>
int run_evaluate(const std::string& checkpoint, const std::string& images,
                 const std::string& labels) {
    const auto ck = ladder::load_checkpoint<S>(checkpoint);
    const auto data = ladder::load_dataset<S>(images, labels);
    if (data.images.cols() != ck.net.input_dim())
        throw ladder::value_error("evaluate: dataset width " + std::to_string(data.images.cols()) +
                                  " does not match the model input " +
                                  std::to_string(ck.net.input_dim()));
    const auto res = ladder::evaluate_dataset(ck.net, data);
    std::cout << "error: " << res.error_pct << "%  (" << data.size() << " samples)\n"
              << "class cost: " << res.class_cost << "  reconst cost: " << res.reconst_cost << "\n";
    return 0;
}

template <typename S>
int run_sweep(const ladder::TrainConfig& cfg, const std::vector<double>& etas, int n_seeds,
              const std::string& out_path) {
    const auto rows = ladder::eta_sweep<S>(cfg, etas, n_seeds);
    std::cout << "eta        mean err %   stdev\n";
    for (const auto& r : rows)
        std::printf("%-10g %-12.4f %-8.4f\n", r.eta, r.mean_error_pct, r.stdev_error_pct);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw ladder::io_error("cannot write " + out_path);
        out << ladder::sweep_to_json(rows).dump(2) << "\n";
        std::cout << "table written to " << out_path << "\n";
    }
    return 0;
}

int run_gradcheck(const std::vector<ladder::index_t>& sizes, ladder::index_t batch, double eta,
                  std::uint64_t seed, double step, double tolerance) {
    // Differentiation checks always run in 64-bit.
    const auto report = ladder::gradcheck<double>(sizes, batch, eta, seed, step, tolerance);
    for (const auto& g : report.groups)
        std::printf("%-16s max rel err %.3e   max |grad| %.3e\n", g.name.c_str(), g.max_rel_error,
                    g.max_abs_analytic);
    std::printf("overall max rel err %.3e (tolerance %.1e): %s\n", report.max_rel_error,
                report.tolerance, report.passed ? "PASS" : "FAIL");
    return report.passed ? 0 : 1;
}

int run_plot(const std::string& in_path, const std::string& out_path) {
    std::ifstream in(in_path);
    if (!in) throw ladder::io_error("cannot open " + in_path);
    nlohmann::json table = nlohmann::json::parse(in);
    std::vector<ladder::SweepRow> rows;
    for (const auto& j : table) {
        ladder::SweepRow r;
        r.eta = j.at("eta").get<double>();
        r.mean_error_pct = j.at("mean_val_error_pct").get<double>();
        r.stdev_error_pct = j.at("stdev_val_error_pct").get<double>();
        if (j.contains("run_errors")) r.run_errors = j["run_errors"].get<std::vector<double>>();
        rows.push_back(std::move(r));
    }
    ladder::write_sweep_svg(out_path, rows);
    std::cout << "plot written to " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Denoising autoencoder with lateral connections; the encoder doubles as a "
                 "classifier trained jointly on C_class + eta * C_reconst."};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a config file; flags override");

    CliOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "Train a model and write metrics + checkpoint");
    add_train_options(train_cmd, train_opt);

    std::string eval_checkpoint, eval_images, eval_labels, eval_data_dir, eval_set = "test";
    auto* eval_cmd = app.add_subcommand("evaluate", "Error rate of a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint path")->required();
    eval_cmd->add_option("--images", eval_images, "IDX image file (overrides --data-dir)");
    eval_cmd->add_option("--labels", eval_labels, "IDX label file (overrides --data-dir)");
    eval_cmd->add_option("--data-dir", eval_data_dir,
                         "Directory with the IDX files (default $LADDER_MNIST_DIR)");
    eval_cmd->add_option("--set", eval_set, "Which canonical pair to read: train or test")
        ->check(CLI::IsMember({"train", "test"}));

    CliOptions sweep_opt;
    std::vector<double> sweep_etas;
    int sweep_seeds = 1;
    std::string sweep_out;
    auto* sweep_cmd =
        app.add_subcommand("sweep", "Train across an eta grid and tabulate held-out error");
    add_train_options(sweep_cmd, sweep_opt);
    sweep_cmd->add_option("--etas", sweep_etas, "Eta values to sweep")->delimiter(',')->required();
    sweep_cmd->add_option("--seeds", sweep_seeds, "Runs per eta (seed, seed+1, ...)")->capture_default_str();
    sweep_cmd->add_option("--out", sweep_out, "JSON output table");

    std::vector<ladder::index_t> gc_sizes = {6, 5, 4, 3};
    ladder::index_t gc_batch = 5;
    double gc_eta = 1.0, gc_step = 1e-5, gc_tol = 1e-4;
    std::uint64_t gc_seed = 1;
    auto* gc_cmd = app.add_subcommand(
        "gradcheck", "Analytic gradients vs central finite differences on a tiny network");
    gc_cmd->add_option("--layer-sizes", gc_sizes, "Layer widths")->capture_default_str()->delimiter(',');
    gc_cmd->add_option("--batch", gc_batch, "Batch size")->capture_default_str();
    gc_cmd->add_option("--eta", gc_eta, "Auxiliary cost multiplier")->capture_default_str();
    gc_cmd->add_option("--seed", gc_seed, "Seed")->capture_default_str();
    gc_cmd->add_option("--step", gc_step, "Central difference step")->capture_default_str();
    gc_cmd->add_option("--tolerance", gc_tol, "Max relative error accepted")->capture_default_str();

    std::string plot_in, plot_out = "sweep.svg";
    auto* plot_cmd = app.add_subcommand("plot", "Render a sweep table as an SVG curve");
    plot_cmd->add_option("--in", plot_in, "Sweep JSON from the sweep subcommand")->required();
    plot_cmd->add_option("--out", plot_out, "SVG output path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            finalize(train_opt);
            return train_opt.cfg.precision == ladder::Precision::f32
                       ? run_train<float>(train_opt.cfg)
                       : run_train<double>(train_opt.cfg);
        }
        if (eval_cmd->parsed()) {
            if (eval_images.empty() || eval_labels.empty()) {
                std::string dir = eval_data_dir;
                if (dir.empty()) {
                    ladder::TrainConfig probe;
                    dir = ladder::dataset_dir(probe);
                }
                const std::string img_base =
                    eval_set == "train" ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
                const std::string lbl_base =
                    eval_set == "train" ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
                eval_images = ladder::resolve_idx_file(dir, img_base);
                eval_labels = ladder::resolve_idx_file(dir, lbl_base);
            }
            return ladder::checkpoint_scalar_size(eval_checkpoint) == 4
                       ? run_evaluate<float>(eval_checkpoint, eval_images, eval_labels)
                       : run_evaluate<double>(eval_checkpoint, eval_images, eval_labels);
        }
        if (sweep_cmd->parsed()) {
            finalize(sweep_opt);
            return sweep_opt.cfg.precision == ladder::Precision::f32
                       ? run_sweep<float>(sweep_opt.cfg, sweep_etas, sweep_seeds, sweep_out)
                       : run_sweep<double>(sweep_opt.cfg, sweep_etas, sweep_seeds, sweep_out);
        }
        if (gc_cmd->parsed())
            return run_gradcheck(gc_sizes, gc_batch, gc_eta, gc_seed, gc_step, gc_tol);
        if (plot_cmd->parsed()) return run_plot(plot_in, plot_out);
    } catch (const ladder::shape_error& e) {
        std::cerr << "error (shape): " << e.what() << "\n";
        return 2;
    } catch (const ladder::value_error& e) {
        std::cerr << "error (argument): " << e.what() << "\n";
        return 3;
    } catch (const ladder::io_error& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return 4;
    } catch (const ladder::numeric_error& e) {
        std::cerr << "error (numeric): " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
