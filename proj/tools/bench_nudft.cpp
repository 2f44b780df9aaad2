// Timing sweep for the encoding hot path; run before picking experiment
// scales.

#include <chrono>
#include <iostream>

#include "longrad/encoding.hpp"
#include "longrad/phantom.hpp"
#include "longrad/trajectory.hpp"

using namespace longrad;
using clk = std::chrono::steady_clock;

int main() {
    for (const int coils : {4, 8}) {
        const int n = 64;
        const int s = n + 1;
        const auto cm = simulate_coil_maps(coils, n, 7);
        const auto traj = build_navi_trajectory(200, s, 0);
        std::vector<std::array<double, 2>> angles;
        for (std::int64_t f = 0; f < 100; ++f) angles.push_back(traj.frame_angles(f));
        const auto op = make_operator(cm, angles, s);

        const auto spec = standard_phantom(n);
        const CVec img = render_frame(spec, {}, 0.0).cast<cplx>();

        auto t0 = clk::now();
        CMat samples;
        for (int f = 0; f < 100; ++f) samples = nudft_forward(img, op, f);
        auto t1 = clk::now();
        CVec back;
        for (int f = 0; f < 100; ++f) back = nudft_adjoint(samples, op, f);
        auto t2 = clk::now();

        const double fwd_ms = std::chrono::duration<double, std::milli>(t1 - t0).count() / 100;
        const double adj_ms = std::chrono::duration<double, std::milli>(t2 - t1).count() / 100;
        std::cout << "N=" << n << " S=" << s << " C=" << coils << "  forward " << fwd_ms
                  << " ms/frame, adjoint " << adj_ms << " ms/frame\n";
        std::cout << "  -> T=500 sweep: fwd " << fwd_ms * 500 / 1000 << " s, iter(fwd+adj) "
                  << (fwd_ms + adj_ms) * 500 / 1000 << " s\n";
    }
    return 0;
}
