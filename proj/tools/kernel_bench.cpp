// Times the OpenMP lattice kernels against their serial reference
// implementations on a few grid sizes. The reference DST is O(L^2) and is
// only run on the smallest grid.

#include "vrd/dst.hpp"
#include "vrd/kernels.hpp"
#include "vrd/ref.hpp"
#include "vrd/rng.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    std::vector<double> samples;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    double best = samples[0];
    for (double s : samples) best = std::min(best, s);
    return best;
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-26s %8s %12s %12s %8s\n", "kernel", "grid", "serial_ms", "omp_ms", "speedup");

    vrd::Xoshiro256pp rng(42);
    const int channels = 8;
    const int reps = 5;

    for (int edge : {64, 256, 512}) {
        vrd::Field f(edge, edge, channels);
        vrd::Field g(edge, edge, channels);
        for (double& v : f.data) v = rng.gaussian();
        for (double& v : g.data) v = rng.gaussian();
        vrd::Mat a(channels, channels);
        for (double& v : a.m) v = rng.uniform(-1.0, 1.0);

        const double lap_s = time_ms([&] { vrd::ref::laplacian_apply(f); }, reps);
        const double lap_p = time_ms([&] { vrd::laplacian_apply(f); }, reps);
        std::printf("%-26s %5dx%-3d %12.3f %12.3f %7.2fx\n", "laplacian", edge, edge, lap_s,
                    lap_p, lap_s / lap_p);

        const double mv_s = time_ms([&] { vrd::ref::channel_matvec(a, f); }, reps);
        const double mv_p = time_ms([&] { vrd::channel_matvec(a, f); }, reps);
        std::printf("%-26s %5dx%-3d %12.3f %12.3f %7.2fx\n", "channel_matvec", edge, edge, mv_s,
                    mv_p, mv_s / mv_p);

        const double gr_s = time_ms([&] { vrd::ref::gram(f, g); }, reps);
        const double gr_p = time_ms([&] { vrd::gram(f, g); }, reps);
        std::printf("%-26s %5dx%-3d %12.3f %12.3f %7.2fx\n", "gram", edge, edge, gr_s, gr_p,
                    gr_s / gr_p);

        if (edge <= 64) {
            vrd::Field plane(edge, edge, 1);
            for (double& v : plane.data) v = rng.gaussian();
            const double dst_s = time_ms([&] { vrd::ref::dst1_forward_direct(plane); }, reps);
            const double dst_p =
                time_ms([&] { vrd::dst1_2d(plane, vrd::DstDirection::forward); }, reps);
            std::printf("%-26s %5dx%-3d %12.3f %12.3f %7.2fx\n", "dst1 (direct vs fft)", edge,
                        edge, dst_s, dst_p, dst_s / dst_p);
        }
    }
    return 0;
}
