#pragma once

#include "vrd/field.hpp"
#include "vrd/mat.hpp"
#include "vrd/vrd.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace vrd {

// Training aborted because the loss became non-finite.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LayerKind { channel_mix, vrd, relu };

/** One network layer. channel_mix applies W s(x) + b per pixel (the 1x1
 *  mixing layer), vrd is a reaction-diffusion layer, relu is elementwise. */
struct Layer {
    LayerKind kind = LayerKind::relu;
    int in_channels = 0;
    int out_channels = 0;
    Mat w;                     // channel_mix
    std::vector<double> bias;  // channel_mix
    VrdParams vrd;             // vrd
};

struct Network {
    std::vector<Layer> layers;
    std::uint64_t rng_seed = 0;
    int in_channels = 0;
    int out_channels = 0;
};

/** Builds a network from an architecture string of comma-separated layer
 *  descriptors, e.g. "mix:16,vrd:8,relu,mix:2". Parameters are initialized
 *  deterministically from seed. */
Network make_network(const std::string& arch, int in_channels, std::uint64_t seed);

struct LayerCache {
    Field input;    // channel_mix and relu: layer input
    VrdCache vrd;   // vrd layers
};

std::pair<Field, std::vector<LayerCache>> net_forward(const Network& net, const Field& input);

struct LayerGrads {
    Mat d_w;
    std::vector<double> d_bias;
    Mat d_r_b, d_r_q, d_q_i, d_b_i;
};

struct NetGrads {
    std::vector<LayerGrads> layers;
    Field d_input;
};

NetGrads net_backward(const Network& net, const std::vector<LayerCache>& caches,
                      const Field& dl_dscores);

struct SoftmaxResult {
    double loss = 0.0;
    Field d_scores;
};

// Mean per-pixel cross entropy of softmax(scores) against integer labels
// (length H*W, row-major); gradient is (softmax - onehot) / (H*W).
SoftmaxResult softmax_xent(const Field& scores, const std::vector<int>& labels);

struct AdaGradState {
    double lr = 0.0;
    double epsilon = 1e-8;
    // One accumulator per parameter tensor, in network order.
    std::vector<std::vector<double>> acc;
};

AdaGradState make_adagrad(const Network& net, double lr);

// acc += g^2; theta -= lr * g / (sqrt(acc) + eps), elementwise.
void adagrad_step(AdaGradState& state, Network& net, const NetGrads& grads);

struct LabeledExample {
    Field input;
    std::vector<int> labels;  // H*W, row-major, in [0, classes)
};

/** Synthetic segmentation task: class regions drawn as unions of random
 *  rectangles and discs (later classes overwrite earlier ones), inputs are
 *  one-hot class indicators plus i.i.d. Gaussian noise. */
std::vector<LabeledExample> gen_synthetic(std::uint64_t seed, int n_examples,
                                          int height, int width, int n_classes,
                                          double noise_sigma);

/** Sequential AdaGrad training, one update per example per epoch, examples in
 *  order. Returns the mean loss per epoch. If halve_lr_every > 0 the learning
 *  rate is halved each time that many epochs complete. Throws
 *  TrainingDiverged if the loss becomes non-finite. */
std::vector<double> train(Network& net, const std::vector<LabeledExample>& dataset,
                          int epochs, double lr, int halve_lr_every = 0);

// Fraction of pixels whose argmax score matches the label.
double pixel_accuracy(const Network& net, const std::vector<LabeledExample>& dataset);

struct TrainConfig {
    int epochs = 30;
    double lr = 0.1;
    std::uint64_t seed = 7;
    double noise_sigma = 1.5;
    int grid_h = 64;
    int grid_w = 64;
    int classes = 2;
    std::string arch = "mix:8,vrd:8,relu,mix:2";

    int train_examples = 40;
    int test_examples = 10;
};

// "key = value" per line; keys: epochs, lr, seed, noise_sigma, grid, classes,
// arch. Blank lines and '#' comments allowed; unknown keys are an error.
TrainConfig parse_train_config(const std::string& text);

}  // namespace vrd
