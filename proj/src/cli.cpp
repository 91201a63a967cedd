#include "vrd/cli.hpp"

#include "vrd/io.hpp"
#include "vrd/model.hpp"
#include "vrd/oracle.hpp"
#include "vrd/rng.hpp"
#include "vrd/vrd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <vector>

namespace vrd::cli {

namespace {

std::string replace_extension(const std::string& path, const std::string& ext) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + ext;
    }
    return path.substr(0, dot) + ext;
}

// Library errors mapped onto the exit-code contract.
template <typename Fn>
int run_guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormatError;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitShapeMismatch;
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormatError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormatError;
    }
}

bool parse_hw(const std::string& text, int& h, int& w) {
    const auto x = text.find('x');
    if (x == std::string::npos) return false;
    try {
        h = std::stoi(text.substr(0, x));
        w = std::stoi(text.substr(x + 1));
    } catch (const std::exception&) {
        return false;
    }
    return h > 0 && w > 0;
}

double median_ms(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
}

}  // namespace

int cmd_infer(const InferOptions& opt) {
    return run_guarded([&]() {
        const VrdParams params = read_vrdp(opt.params_path);
        const Field input = read_vrdt(opt.input_path);
        auto [s_o, cache] = vrd_forward(input, params);
        write_vrdt(opt.output_path, s_o);
        if (!opt.labels_path.empty()) {
            Field labels(s_o.height, s_o.width, 1);
            const int k = s_o.channels;
            for (std::size_t px = 0; px < s_o.pixels(); ++px) {
                int best = 0;
                for (int c = 1; c < k; ++c) {
                    if (s_o.data[px * k + c] > s_o.data[px * k + best]) best = c;
                }
                labels.data[px] = static_cast<double>(best);
            }
            write_vrdt(opt.labels_path, labels);
        }
        return kExitOk;
    });
}

int cmd_train(const TrainOptions& opt) {
    return run_guarded([&]() {
        std::ifstream in(opt.config_path);
        if (!in) throw FormatError(opt.config_path + ": cannot open config");
        std::stringstream buffer;
        buffer << in.rdbuf();
        const TrainConfig cfg = parse_train_config(buffer.str());

        const std::vector<LabeledExample> data =
            gen_synthetic(cfg.seed, cfg.train_examples + cfg.test_examples, cfg.grid_h,
                          cfg.grid_w, cfg.classes, cfg.noise_sigma);
        const std::vector<LabeledExample> train_set(data.begin(), data.begin() + cfg.train_examples);
        const std::vector<LabeledExample> test_set(data.begin() + cfg.train_examples, data.end());

        Network net = make_network(cfg.arch, cfg.classes, cfg.seed + 1);
        const Layer* vrd_layer = nullptr;
        for (const Layer& l : net.layers) {
            if (l.kind == LayerKind::vrd) {
                vrd_layer = &l;
                break;
            }
        }
        if (!vrd_layer) {
            throw std::invalid_argument("train: arch contains no vrd layer, nothing to export");
        }

        const std::vector<double> history = train(net, train_set, cfg.epochs, cfg.lr);
        write_vrdp(opt.out_path, vrd_layer->vrd);
        write_loss_csv(replace_extension(opt.out_path, ".csv"), history);

        std::cout << "trained " << cfg.epochs << " epochs";
        if (!history.empty()) {
            std::cout << ", loss " << history.front() << " -> " << history.back();
        }
        std::cout << ", held-out pixel accuracy " << pixel_accuracy(net, test_set) << "\n";
        return kExitOk;
    });
}

int cmd_green(const GreenOptions& opt) {
    return run_guarded([&]() {
        int h = 0, w = 0;
        if (!parse_hw(opt.size, h, w)) {
            throw std::invalid_argument("green: --size must be HxW with positive integers");
        }
        const Field g = green_function(opt.lambda, h, w);
        const double peak = max_abs(g);
        std::vector<std::uint8_t> pixels(g.pixels());
        for (std::size_t px = 0; px < g.pixels(); ++px) {
            const double v = std::max(0.0, g.data[px]);
            pixels[px] = static_cast<std::uint8_t>(std::lround(255.0 * v / peak));
        }
        write_pgm8(opt.out_path, h, w, pixels);
        write_field_csv(replace_extension(opt.out_path, ".csv"), g);
        return kExitOk;
    });
}

int cmd_bench(const BenchOptions& opt) {
    return run_guarded([&]() {
        std::vector<std::pair<int, int>> grids;
        if (!opt.sizes.empty()) {
            std::stringstream ss(opt.sizes);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                int edge = 0;
                try {
                    edge = std::stoi(tok);
                } catch (const std::exception&) {
                    throw std::invalid_argument("bench: bad size '" + tok + "'");
                }
                if (edge <= 0) throw std::invalid_argument("bench: size must be positive");
                grids.emplace_back(edge, edge);
            }
        }
        if (!opt.rect.empty()) {
            int h = 0, w = 0;
            if (!parse_hw(opt.rect, h, w)) {
                throw std::invalid_argument("bench: --rect must be HxW");
            }
            grids.emplace_back(h, w);
        }
        if (grids.empty()) throw std::invalid_argument("bench: no grid sizes given");

        std::ostringstream csv;
        csv << "L,t_fwd_ms,t_bwd_ms\n";
        std::cout << "      L   t_fwd_ms   t_bwd_ms\n";
        for (const auto& [h, w] : grids) {
            Xoshiro256pp rng(opt.seed);
            VrdParams params = init_params(opt.n_i, opt.n_o, opt.seed);
            for (double& v : params.r_b.m) v = rng.uniform(-0.2, 0.2);
            for (double& v : params.r_q.m) v = rng.uniform(-0.2, 0.2);
            for (double& v : params.b_i.m) v = rng.uniform(-0.1, 0.1);
            Field input(h, w, opt.n_i);
            for (double& v : input.data) v = rng.gaussian();

            std::vector<double> fwd_ms, bwd_ms;
            for (int rep = 0; rep < opt.reps; ++rep) {
                const auto t0 = std::chrono::steady_clock::now();
                auto [s_o, cache] = vrd_forward(input, params);
                const auto t1 = std::chrono::steady_clock::now();
                VrdGrads grads = vrd_backward(s_o, cache, input, params);
                const auto t2 = std::chrono::steady_clock::now();
                fwd_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
                bwd_ms.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
            }
            const long long l = static_cast<long long>(h) * w;
            const double fwd = median_ms(fwd_ms), bwd = median_ms(bwd_ms);
            csv << l << "," << fwd << "," << bwd << "\n";
            std::cout << std::setw(7) << l << "   " << std::setw(8) << fwd << "   "
                      << std::setw(8) << bwd << "\n";
        }
        if (!opt.csv_path.empty()) {
            std::ofstream out(opt.csv_path);
            if (!out) throw FormatError(opt.csv_path + ": cannot open file for writing");
            out << csv.str();
        }
        return kExitOk;
    });
}

int cmd_selftest() {
    try {
        return oracle::selftest(std::cout) == 0 ? kExitOk : kExitSelftestFailed;
    } catch (const std::exception& e) {
        std::cerr << "selftest: exception: " << e.what() << "\n";
        return kExitSelftestFailed;
    }
}

}  // namespace vrd::cli
