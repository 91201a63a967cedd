#pragma once

#include <cstdint>
#include <string>

namespace vrd::cli {

// Exit codes shared by all commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSelftestFailed = 1;
inline constexpr int kExitFormatError = 2;
inline constexpr int kExitShapeMismatch = 3;
inline constexpr int kExitDivergence = 4;

struct InferOptions {
    std::string params_path;
    std::string input_path;
    std::string output_path;
    std::string labels_path;  // optional: per-pixel argmax output
};
int cmd_infer(const InferOptions& opt);

struct TrainOptions {
    std::string config_path;
    std::string out_path;  // .vrdp; the loss history goes to the same stem .csv
};
int cmd_train(const TrainOptions& opt);

struct GreenOptions {
    double lambda = 1e-2;
    std::string size = "255x255";  // HxW
    std::string out_path;          // .pgm; raw values go to the same stem .csv
};
int cmd_green(const GreenOptions& opt);

struct BenchOptions {
    std::string sizes;  // comma-separated square edge lengths
    std::string rect;   // optional extra HxW entry
    int n_i = 16;
    int n_o = 8;
    std::string csv_path;
    std::uint64_t seed = 1;
    int reps = 5;
};
int cmd_bench(const BenchOptions& opt);

int cmd_selftest();

}  // namespace vrd::cli
