#include "longrad/longitudinal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace longrad {

namespace {

constexpr double kPi = std::numbers::pi_v<double>;
constexpr double kTwoPi = 2.0 * kPi;

// Dense DFT matrix; grids here are small enough that matrix products beat
// the bookkeeping of an FFT dependency.
CMat dft_matrix(int n) {
    CMat f(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            f(i, j) = std::polar(1.0, -kTwoPi * i * j / n);
    return f;
}

double wrap_signed(double v, int n) {
    return v > n / 2.0 ? v - n : v;
}

// Parabolic peak refinement from three samples; offset in [-0.5, 0.5].
double parabolic_offset(double ym, double y0, double yp) {
    const double denom = ym - 2.0 * y0 + yp;
    if (denom == 0.0) return 0.0;
    const double off = 0.5 * (ym - yp) / denom;
    return std::clamp(off, -0.5, 0.5);
}

RMat fftshift(const RMat& x) {
    const int n = static_cast<int>(x.rows());
    RMat y(n, n);
    const int h = n / 2;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) y((i + h) % n, (j + h) % n) = x(i, j);
    return y;
}

double estimate_rotation(const RMat& spec_ref, const RMat& spec_mov, int n) {
    // Correlate polar resamplings of the (DC-centered) magnitude spectra
    // over angle; magnitude spectra are translation-invariant and
    // rotation-covariant.
    const int n_angles = 180;
    const int r_lo = 2;
    const int r_hi = n / 2 - 2;
    const RMat a = fftshift(spec_ref);
    const RMat b = fftshift(spec_mov);

    auto polar_profile = [&](const RMat& img, int ai) {
        const double phi = kPi * ai / n_angles;
        const double cs = std::cos(phi);
        const double sn = std::sin(phi);
        double acc = 0.0;
        for (int r = r_lo; r <= r_hi; ++r) {
            const double x = n / 2 + r * cs;
            const double y = n / 2 + r * sn;
            const int x0 = static_cast<int>(std::floor(x));
            const int y0 = static_cast<int>(std::floor(y));
            if (x0 < 0 || y0 < 0 || x0 + 1 >= n || y0 + 1 >= n) continue;
            const double fx = x - x0;
            const double fy = y - y0;
            acc += (1 - fx) * (1 - fy) * img(y0, x0) + fx * (1 - fy) * img(y0, x0 + 1) +
                   (1 - fx) * fy * img(y0 + 1, x0) + fx * fy * img(y0 + 1, x0 + 1);
        }
        return acc;
    };

    RVec pa(n_angles), pb(n_angles);
    for (int ai = 0; ai < n_angles; ++ai) {
        pa[ai] = polar_profile(a, ai);
        pb[ai] = polar_profile(b, ai);
    }
    pa.array() -= pa.mean();
    pb.array() -= pb.mean();

    RVec corr(n_angles);
    for (int s = 0; s < n_angles; ++s) {
        double acc = 0.0;
        for (int ai = 0; ai < n_angles; ++ai) acc += pa[(ai + s) % n_angles] * pb[ai];
        corr[s] = acc;
    }
    Eigen::Index best = 0;
    corr.maxCoeff(&best);
    const int bi = static_cast<int>(best);
    const double off = parabolic_offset(corr[(bi + n_angles - 1) % n_angles], corr[bi],
                                        corr[(bi + 1) % n_angles]);
    double shift = bi + off;
    if (shift > n_angles / 2.0) shift -= n_angles;
    // moving = rot(reference, theta) peaks at shift = -theta
    return kPi * shift / n_angles * -1.0;
}

} // namespace

CVec time_average(const SessionDataset& ds, const CoilMaps& coils) {
    if (ds.frame_count() == 0) throw std::invalid_argument("time_average: empty dataset");
    EncodingOperator op = make_operator(coils, std::span<const SessionDataset>(&ds, 1));
    const std::int64_t t = ds.frame_count();
    const int s = op.samples_per_spoke;
    const int c = op.coil_count();

    CMat slab(static_cast<Eigen::Index>(op.grid_size) * op.grid_size, t);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t f = 0; f < t; ++f) {
        CMat r = ds.kspace[f];
        for (int ci = 0; ci < c; ++ci)
            for (int sp = 0; sp < 2; ++sp)
                for (int j = 0; j < s; ++j) r(sp * s + j, ci) *= op.weights[j];
        slab.col(f) = nudft_adjoint(r, op, f);
    }

    const double dk = 2.0 * op.k_max / (s - 1);
    const double dtheta = kPi / static_cast<double>(2 * t);  // all spokes pooled
    return (op.k_max * dk * dtheta) * slab.rowwise().sum();
}

RigidTransform estimate_rigid(const CVec& reference_avg, const CVec& moving_avg, int grid_size,
                              const RigidOptions& opts) {
    const int n = grid_size;
    if (reference_avg.size() != static_cast<Eigen::Index>(n) * n ||
        moving_avg.size() != reference_avg.size())
        throw std::invalid_argument("estimate_rigid: image dimensions differ");

    RMat a(n, n), b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            a(i, j) = std::abs(reference_avg[static_cast<Eigen::Index>(i) * n + j]);
            b(i, j) = std::abs(moving_avg[static_cast<Eigen::Index>(i) * n + j]);
        }

    const CMat F = dft_matrix(n);
    const CMat A = F * a.cast<cplx>() * F;
    const CMat B = F * b.cast<cplx>() * F;

    CMat R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cplx v = A(i, j) * std::conj(B(i, j));
            const double mag = std::abs(v);
            R(i, j) = mag > 1e-300 ? v / mag : cplx(0.0, 0.0);
        }

    const CMat Fc = F.conjugate();
    const RMat r = ((Fc * R * Fc) / static_cast<double>(n) / n).real();

    Eigen::Index pi = 0, pj = 0;
    const double peak = r.maxCoeff(&pi, &pj);

    RigidTransform t;
    t.peak_score = peak;
    if (peak < opts.peak_threshold) {
        t.low_confidence = true;
        return t;
    }

    const int i0 = static_cast<int>(pi), j0 = static_cast<int>(pj);
    const double oy = parabolic_offset(r((i0 + n - 1) % n, j0), r(i0, j0), r((i0 + 1) % n, j0));
    const double ox = parabolic_offset(r(i0, (j0 + n - 1) % n), r(i0, j0), r(i0, (j0 + 1) % n));
    // Peak sits at minus the content displacement.
    t.dx = -wrap_signed(j0 + ox, n);
    t.dy = -wrap_signed(i0 + oy, n);

    if (opts.enable_rotation) {
        const RMat sa = A.cwiseAbs();
        const RMat sb = B.cwiseAbs();
        t.dtheta = estimate_rotation(sa, sb, n);
    }
    return t;
}

SessionDataset apply_rigid_kspace(const SessionDataset& ds, const RigidTransform& t) {
    SessionDataset out = ds;
    const int s = ds.samples_per_spoke();
    const int c = ds.coil_count();
    const double k_max = ds.trajectory.k_max;
    const double dk = 2.0 * k_max / (s - 1);

    auto spoke_phase = [&](double angle, CMat& block, int row0) {
        const double proj = t.dx * std::cos(angle) + t.dy * std::sin(angle);
        if (proj == 0.0) return;
        for (int j = 0; j < s; ++j) {
            const double k = -k_max + j * dk;
            const cplx ph = std::polar(1.0, -kTwoPi * k * proj);
            for (int ci = 0; ci < c; ++ci) block(row0 + j, ci) *= ph;
        }
    };

    for (std::int64_t f = 0; f < out.frame_count(); ++f) {
        const auto angles = ds.trajectory.frame_angles(f);
        spoke_phase(angles[0], out.kspace[f], 0);
        spoke_phase(angles[1], out.kspace[f], s);
        spoke_phase(0.0, out.navigators[f], 0);
    }

    if (t.dtheta != 0.0) {
        for (auto& e : out.trajectory.entries) e.angle += t.dtheta;
    }
    out.applied_transform = t;
    return out;
}

ExtendedDataset concatenate(std::span<const SessionDataset> datasets, int K) {
    if (datasets.empty()) throw std::invalid_argument("concatenate: no sessions");
    ExtendedDataset ext;
    ext.sessions.assign(datasets.begin(), datasets.end());
    const auto proj = navigator_projections(datasets);
    ext.joint_basis = estimate_basis(proj, K);
    ext.frame_boundaries = proj.session_boundaries;
    return ext;
}

std::vector<DynamicSeries> split_series(const DynamicSeries& series) {
    if (series.session_boundaries.empty())
        throw std::invalid_argument("split_series: series has no session boundaries");
    const std::int64_t t = series.m.cols();
    std::vector<DynamicSeries> out;
    const auto& b = series.session_boundaries;
    for (std::size_t s = 0; s < b.size(); ++s) {
        const std::int64_t begin = b[s];
        const std::int64_t end = (s + 1 < b.size()) ? b[s + 1] : t;
        if (begin < 0 || end > t || begin >= end)
            throw std::invalid_argument("split_series: inconsistent boundaries");
        DynamicSeries part;
        part.m = series.m.middleCols(begin, end - begin);
        part.grid_size = series.grid_size;
        part.session_boundaries = {0};
        out.push_back(std::move(part));
    }
    return out;
}

} // namespace longrad
