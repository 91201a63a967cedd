#include "vrd/model.hpp"

#include "vrd/kernels.hpp"
#include "vrd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vrd {

namespace {

Layer make_channel_mix(int in_channels, int out_channels, Xoshiro256pp& rng) {
    Layer l;
    l.kind = LayerKind::channel_mix;
    l.in_channels = in_channels;
    l.out_channels = out_channels;
    l.w = Mat(out_channels, in_channels);
    const double a = 1.0 / std::sqrt(static_cast<double>(in_channels));
    for (double& v : l.w.m) v = rng.uniform(-a, a);
    l.bias.assign(out_channels, 0.0);
    return l;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Network make_network(const std::string& arch, int in_channels, std::uint64_t seed) {
    Network net;
    net.rng_seed = seed;
    net.in_channels = in_channels;
    Xoshiro256pp rng(seed);
    int channels = in_channels;
    for (const std::string& raw : split(arch, ',')) {
        const std::string tok = trim(raw);
        if (tok.empty()) throw std::invalid_argument("make_network: empty layer descriptor");
        const auto colon = tok.find(':');
        const std::string kind = colon == std::string::npos ? tok : tok.substr(0, colon);
        if (kind == "relu") {
            if (colon != std::string::npos) {
                throw std::invalid_argument("make_network: relu takes no argument");
            }
            Layer l;
            l.kind = LayerKind::relu;
            l.in_channels = channels;
            l.out_channels = channels;
            net.layers.push_back(std::move(l));
            continue;
        }
        if (colon == std::string::npos) {
            throw std::invalid_argument("make_network: layer '" + kind + "' needs a channel count");
        }
        int out = 0;
        try {
            out = std::stoi(tok.substr(colon + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("make_network: bad channel count in '" + tok + "'");
        }
        if (out <= 0) throw std::invalid_argument("make_network: channel count must be positive");
        if (kind == "mix") {
            net.layers.push_back(make_channel_mix(channels, out, rng));
        } else if (kind == "vrd") {
            Layer l;
            l.kind = LayerKind::vrd;
            l.in_channels = channels;
            l.out_channels = out;
            l.vrd = init_params(channels, out, rng.next());
            net.layers.push_back(std::move(l));
        } else {
            throw std::invalid_argument("make_network: unknown layer kind '" + kind + "'");
        }
        channels = out;
    }
    net.out_channels = channels;
    return net;
}

std::pair<Field, std::vector<LayerCache>> net_forward(const Network& net, const Field& input) {
    require_valid(input, "net_forward");
    require_finite(input, "net_forward");
    if (input.channels != net.in_channels) {
        throw ShapeError("net_forward: input channel count does not match network");
    }
    Field cur = input;
    std::vector<LayerCache> caches;
    caches.reserve(net.layers.size());
    for (const Layer& layer : net.layers) {
        LayerCache cache;
        switch (layer.kind) {
            case LayerKind::channel_mix: {
                cache.input = cur;
                Field out = channel_matvec(layer.w, cur);
                const int co = layer.out_channels;
#pragma omp parallel for schedule(static)
                for (long long px = 0; px < static_cast<long long>(out.pixels()); ++px) {
                    for (int c = 0; c < co; ++c) out.data[px * co + c] += layer.bias[c];
                }
                cur = std::move(out);
                break;
            }
            case LayerKind::vrd: {
                cache.input = cur;
                auto [out, vrd_cache] = vrd_forward(cur, layer.vrd);
                cache.vrd = std::move(vrd_cache);
                cur = std::move(out);
                break;
            }
            case LayerKind::relu: {
                cache.input = cur;  // pre-activation mask source
                Field out = cur;
                for (double& v : out.data) v = v > 0.0 ? v : 0.0;
                cur = std::move(out);
                break;
            }
        }
        caches.push_back(std::move(cache));
    }
    return {std::move(cur), std::move(caches)};
}

NetGrads net_backward(const Network& net, const std::vector<LayerCache>& caches,
                      const Field& dl_dscores) {
    if (caches.size() != net.layers.size()) {
        throw std::invalid_argument("net_backward: cache count does not match network");
    }
    NetGrads grads;
    grads.layers.resize(net.layers.size());
    Field g = dl_dscores;
    for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
        const Layer& layer = net.layers[li];
        LayerGrads& lg = grads.layers[li];
        const LayerCache& cache = caches[li];
        switch (layer.kind) {
            case LayerKind::channel_mix: {
                lg.d_w = gram(g, cache.input);
                lg.d_bias = channel_sums(g);
                Mat wt = transpose(layer.w);
                g = channel_matvec(wt, g);
                break;
            }
            case LayerKind::vrd: {
                VrdGrads vg = vrd_backward(g, cache.vrd, cache.input, layer.vrd);
                lg.d_r_b = std::move(vg.d_r_b);
                lg.d_r_q = std::move(vg.d_r_q);
                lg.d_q_i = std::move(vg.d_q_i);
                lg.d_b_i = std::move(vg.d_b_i);
                g = std::move(vg.d_s_i);
                break;
            }
            case LayerKind::relu: {
                Field masked = g;
                for (std::size_t k = 0; k < masked.data.size(); ++k) {
                    if (!(cache.input.data[k] > 0.0)) masked.data[k] = 0.0;
                }
                g = std::move(masked);
                break;
            }
        }
    }
    grads.d_input = std::move(g);
    return grads;
}

SoftmaxResult softmax_xent(const Field& scores, const std::vector<int>& labels) {
    require_valid(scores, "softmax_xent");
    require_finite(scores, "softmax_xent");
    const int k = scores.channels;
    const std::size_t pixels = scores.pixels();
    if (labels.size() != pixels) throw ShapeError("softmax_xent: label count mismatch");
    for (int lab : labels) {
        if (lab < 0 || lab >= k) throw std::invalid_argument("softmax_xent: label out of range");
    }
    const double inv_n = 1.0 / static_cast<double>(pixels);
    SoftmaxResult res;
    res.d_scores = Field(scores.height, scores.width, k);
    const int h = scores.height, w = scores.width;
    std::vector<double> row_loss(h, 0.0);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        double acc = 0.0;
        for (int j = 0; j < w; ++j) {
            const std::size_t px = static_cast<std::size_t>(i) * w + j;
            const double* s = &scores.data[px * k];
            double* d = &res.d_scores.data[px * k];
            double m = s[0];
            for (int c = 1; c < k; ++c) m = std::max(m, s[c]);
            double z = 0.0;
            for (int c = 0; c < k; ++c) z += std::exp(s[c] - m);
            const double logz = m + std::log(z);
            acc -= s[labels[px]] - logz;
            for (int c = 0; c < k; ++c) {
                d[c] = (std::exp(s[c] - logz) - (c == labels[px] ? 1.0 : 0.0)) * inv_n;
            }
        }
        row_loss[i] = acc;
    }
    double total = 0.0;
    for (double v : row_loss) total += v;
    res.loss = total * inv_n;
    return res;
}

AdaGradState make_adagrad(const Network& net, double lr) {
    AdaGradState state;
    state.lr = lr;
    for (const Layer& layer : net.layers) {
        switch (layer.kind) {
            case LayerKind::channel_mix:
                state.acc.emplace_back(layer.w.m.size(), 0.0);
                state.acc.emplace_back(layer.bias.size(), 0.0);
                break;
            case LayerKind::vrd:
                state.acc.emplace_back(layer.vrd.r_b.m.size(), 0.0);
                state.acc.emplace_back(layer.vrd.r_q.m.size(), 0.0);
                state.acc.emplace_back(layer.vrd.q_i.m.size(), 0.0);
                state.acc.emplace_back(layer.vrd.b_i.m.size(), 0.0);
                break;
            case LayerKind::relu:
                break;
        }
    }
    return state;
}

namespace {

void adagrad_update(std::vector<double>& acc, std::vector<double>& theta,
                    const std::vector<double>& g, double lr, double eps) {
    for (std::size_t k = 0; k < theta.size(); ++k) {
        acc[k] += g[k] * g[k];
        theta[k] -= lr * g[k] / (std::sqrt(acc[k]) + eps);
    }
}

bool params_finite(const Network& net) {
    const auto all_finite = [](const std::vector<double>& v) {
        for (double x : v) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    };
    for (const Layer& layer : net.layers) {
        switch (layer.kind) {
            case LayerKind::channel_mix:
                if (!all_finite(layer.w.m) || !all_finite(layer.bias)) return false;
                break;
            case LayerKind::vrd:
                if (!all_finite(layer.vrd.r_b.m) || !all_finite(layer.vrd.r_q.m) ||
                    !all_finite(layer.vrd.q_i.m) || !all_finite(layer.vrd.b_i.m)) {
                    return false;
                }
                break;
            case LayerKind::relu:
                break;
        }
    }
    return true;
}

}  // namespace

void adagrad_step(AdaGradState& state, Network& net, const NetGrads& grads) {
    std::size_t slot = 0;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        Layer& layer = net.layers[li];
        const LayerGrads& lg = grads.layers[li];
        switch (layer.kind) {
            case LayerKind::channel_mix:
                adagrad_update(state.acc[slot++], layer.w.m, lg.d_w.m, state.lr, state.epsilon);
                adagrad_update(state.acc[slot++], layer.bias, lg.d_bias, state.lr, state.epsilon);
                break;
            case LayerKind::vrd:
                adagrad_update(state.acc[slot++], layer.vrd.r_b.m, lg.d_r_b.m, state.lr, state.epsilon);
                adagrad_update(state.acc[slot++], layer.vrd.r_q.m, lg.d_r_q.m, state.lr, state.epsilon);
                adagrad_update(state.acc[slot++], layer.vrd.q_i.m, lg.d_q_i.m, state.lr, state.epsilon);
                adagrad_update(state.acc[slot++], layer.vrd.b_i.m, lg.d_b_i.m, state.lr, state.epsilon);
                break;
            case LayerKind::relu:
                break;
        }
    }
}

std::vector<LabeledExample> gen_synthetic(std::uint64_t seed, int n_examples,
                                          int height, int width, int n_classes,
                                          double noise_sigma) {
    if (n_classes < 2) throw std::invalid_argument("gen_synthetic: need at least 2 classes");
    Xoshiro256pp rng(seed);
    std::vector<LabeledExample> out;
    out.reserve(n_examples);
    for (int e = 0; e < n_examples; ++e) {
        LabeledExample ex;
        ex.labels.assign(static_cast<std::size_t>(height) * width, 0);
        for (int cls = 1; cls < n_classes; ++cls) {
            const int n_rects = 1 + static_cast<int>(rng.below(3));
            for (int r = 0; r < n_rects; ++r) {
                int i0 = static_cast<int>(rng.below(height)), i1 = static_cast<int>(rng.below(height));
                int j0 = static_cast<int>(rng.below(width)), j1 = static_cast<int>(rng.below(width));
                if (i0 > i1) std::swap(i0, i1);
                if (j0 > j1) std::swap(j0, j1);
                for (int i = i0; i <= i1; ++i)
                    for (int j = j0; j <= j1; ++j) ex.labels[i * width + j] = cls;
            }
            const int n_discs = 1 + static_cast<int>(rng.below(3));
            for (int d = 0; d < n_discs; ++d) {
                const int ci = static_cast<int>(rng.below(height));
                const int cj = static_cast<int>(rng.below(width));
                const int max_r = std::max(2, std::min(height, width) / 3);
                const int radius = 2 + static_cast<int>(rng.below(max_r));
                for (int i = std::max(0, ci - radius); i <= std::min(height - 1, ci + radius); ++i) {
                    for (int j = std::max(0, cj - radius); j <= std::min(width - 1, cj + radius); ++j) {
                        const int di = i - ci, dj = j - cj;
                        if (di * di + dj * dj <= radius * radius) ex.labels[i * width + j] = cls;
                    }
                }
            }
        }
        ex.input = Field(height, width, n_classes);
        for (int i = 0; i < height; ++i) {
            for (int j = 0; j < width; ++j) {
                const int lab = ex.labels[i * width + j];
                for (int c = 0; c < n_classes; ++c) {
                    ex.input.at(i, j, c) = (c == lab ? 1.0 : 0.0) + noise_sigma * rng.gaussian();
                }
            }
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<double> train(Network& net, const std::vector<LabeledExample>& dataset,
                          int epochs, double lr, int halve_lr_every) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    AdaGradState state = make_adagrad(net, lr);
    std::vector<double> history;
    history.reserve(epochs);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        if (halve_lr_every > 0 && epoch > 0 && epoch % halve_lr_every == 0) state.lr *= 0.5;
        double epoch_loss = 0.0;
        for (const LabeledExample& ex : dataset) {
            // Once shapes are validated, numeric failures below can only come
            // from parameters blowing up; report them as divergence.
            try {
                auto [scores, caches] = net_forward(net, ex.input);
                SoftmaxResult sm = softmax_xent(scores, ex.labels);
                if (!std::isfinite(sm.loss)) {
                    throw TrainingDiverged("train: loss became non-finite");
                }
                epoch_loss += sm.loss;
                NetGrads grads = net_backward(net, caches, sm.d_scores);
                adagrad_step(state, net, grads);
            } catch (const ShapeError&) {
                throw;
            } catch (const TrainingDiverged&) {
                throw;
            } catch (const std::invalid_argument& e) {
                throw TrainingDiverged(std::string("train: diverged (") + e.what() + ")");
            } catch (const std::runtime_error& e) {
                throw TrainingDiverged(std::string("train: diverged (") + e.what() + ")");
            }
            if (!params_finite(net)) {
                throw TrainingDiverged("train: parameters became non-finite");
            }
        }
        history.push_back(epoch_loss / static_cast<double>(dataset.size()));
    }
    return history;
}

double pixel_accuracy(const Network& net, const std::vector<LabeledExample>& dataset) {
    std::size_t correct = 0, total = 0;
    for (const LabeledExample& ex : dataset) {
        auto [scores, caches] = net_forward(net, ex.input);
        const int k = scores.channels;
        for (std::size_t px = 0; px < scores.pixels(); ++px) {
            int best = 0;
            for (int c = 1; c < k; ++c) {
                if (scores.data[px * k + c] > scores.data[px * k + best]) best = c;
            }
            correct += best == ex.labels[px] ? 1 : 0;
        }
        total += scores.pixels();
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            if (key == "epochs") {
                cfg.epochs = std::stoi(value);
            } else if (key == "lr") {
                cfg.lr = std::stod(value);
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else if (key == "noise_sigma") {
                cfg.noise_sigma = std::stod(value);
            } else if (key == "grid") {
                const auto x = value.find('x');
                if (x == std::string::npos) throw std::invalid_argument("expected HxW");
                cfg.grid_h = std::stoi(value.substr(0, x));
                cfg.grid_w = std::stoi(value.substr(x + 1));
            } else if (key == "classes") {
                cfg.classes = std::stoi(value);
            } else if (key == "arch") {
                cfg.arch = value;
            } else {
                throw std::invalid_argument("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
        }
        if (cfg.epochs < 0 || cfg.lr < 0 || cfg.noise_sigma < 0 || cfg.grid_h <= 0 ||
            cfg.grid_w <= 0 || cfg.classes < 2) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": value out of range");
        }
    }
    return cfg;
}

}  // namespace vrd
