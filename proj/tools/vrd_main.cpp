#include "vrd/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

int main(int argc, char** argv) {
    CLI::App app{"Variational reaction-diffusion solver and trainer"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "cap the number of worker threads (default: hardware)");

    vrd::cli::InferOptions infer_opt;
    CLI::App* infer = app.add_subcommand("infer", "solve the reaction-diffusion system for an input tensor");
    infer->fallthrough();
    infer->add_option("--params", infer_opt.params_path, "VRDP parameter file")->required();
    infer->add_option("--input", infer_opt.input_path, "VRDT input tensor")->required();
    infer->add_option("--output", infer_opt.output_path, "VRDT output tensor")->required();
    infer->add_option("--labels", infer_opt.labels_path, "optional VRDT per-pixel argmax output");

    vrd::cli::TrainOptions train_opt;
    CLI::App* train = app.add_subcommand("train", "train a network on synthetic segmentation data");
    train->add_option("--config", train_opt.config_path, "training config file")->required();
    train->add_option("--out", train_opt.out_path, "output VRDP file (loss history goes to .csv)")
        ->required();

    vrd::cli::GreenOptions green_opt;
    CLI::App* green = app.add_subcommand("green", "export the impulse response of one scalar solve");
    green->add_option("--lambda", green_opt.lambda, "screening coefficient (positive)")->required();
    green->add_option("--size", green_opt.size, "grid size HxW (odd dims center the impulse)")
        ->required();
    green->add_option("--out", green_opt.out_path, "output PGM file (raw values go to .csv)")
        ->required();

    vrd::cli::BenchOptions bench_opt;
    CLI::App* bench = app.add_subcommand("bench", "time forward and backward passes");
    bench->add_option("--sizes", bench_opt.sizes, "comma-separated square edge lengths");
    bench->add_option("--rect", bench_opt.rect, "additional rectangular grid HxW");
    bench->add_option("--ni", bench_opt.n_i, "input channels");
    bench->add_option("--no", bench_opt.n_o, "output channels");
    bench->add_option("--csv", bench_opt.csv_path, "write timings to this CSV file");
    bench->add_option("--seed", bench_opt.seed, "seed for random parameters and inputs");
    bench->add_option("--reps", bench_opt.reps, "repetitions per size (median reported)");

    CLI::App* selftest = app.add_subcommand("selftest", "run the full verification battery");

    // Let global options like --threads appear after the subcommand too.
    for (CLI::App* sub : {infer, train, green, bench, selftest}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return vrd::cli::kExitFormatError;
    }

    if (threads > 0) omp_set_num_threads(threads);

    if (infer->parsed()) return vrd::cli::cmd_infer(infer_opt);
    if (train->parsed()) return vrd::cli::cmd_train(train_opt);
    if (green->parsed()) return vrd::cli::cmd_green(green_opt);
    if (bench->parsed()) return vrd::cli::cmd_bench(bench_opt);
    if (selftest->parsed()) return vrd::cli::cmd_selftest();
    return vrd::cli::kExitFormatError;
}
