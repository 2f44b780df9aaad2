#include "longrad/encoding.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "longrad/array_io.hpp"

namespace longrad {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;
constexpr int kBlock = 8;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t noise_key(std::uint64_t seed, int session_id, std::int64_t frame_time) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(session_id + 1));
    h = splitmix64(h ^ static_cast<std::uint64_t>(frame_time + 1));
    return h;
}

// Per-pixel kernel start values exp(-2*pi*i*k0*p) and step factors
// exp(-2*pi*i*dk*p) for one spoke direction, p = x*cos + y*sin. The
// exponential factorizes over x and y, so only 2N trig evaluations are
// needed per table.
struct SpokePhases {
    std::vector<double> e0_re, e0_im;
    std::vector<double> st_re, st_im;
};

void phase_grid(int n, double angle, double k, std::vector<double>& out_re,
                std::vector<double>& out_im) {
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    std::vector<cplx> fx(n), fy(n);
    for (int j = 0; j < n; ++j) {
        const double x = j - n / 2;
        fx[j] = std::polar(1.0, -kTwoPi * k * x * cs);
    }
    for (int i = 0; i < n; ++i) {
        const double y = i - n / 2;
        fy[i] = std::polar(1.0, -kTwoPi * k * y * sn);
    }
    out_re.resize(static_cast<std::size_t>(n) * n);
    out_im.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        const cplx fyi = fy[i];
        for (int j = 0; j < n; ++j) {
            const cplx v = fyi * fx[j];
            out_re[static_cast<std::size_t>(i) * n + j] = v.real();
            out_im[static_cast<std::size_t>(i) * n + j] = v.imag();
        }
    }
}

void build_spoke_phases(int n, double angle, int samples, double k_max, SpokePhases& ph) {
    const double dk = 2.0 * k_max / (samples - 1);
    phase_grid(n, angle, -k_max, ph.e0_re, ph.e0_im);
    phase_grid(n, angle, dk, ph.st_re, ph.st_im);
}

void spoke_forward_ph(const SpokePhases& ph, const cplx* image, int n, int samples, cplx* out) {
    const std::size_t np = static_cast<std::size_t>(n) * n;
    std::vector<double> acc_re(static_cast<std::size_t>(samples) * kBlock, 0.0);
    std::vector<double> acc_im(static_cast<std::size_t>(samples) * kBlock, 0.0);

    const std::size_t blocks = np / kBlock;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t r0 = b * kBlock;
        alignas(64) double cre[kBlock], cim[kBlock], pre[kBlock], pim[kBlock];
        for (int l = 0; l < kBlock; ++l) {
            const std::size_t r = r0 + l;
            const double wre = image[r].real();
            const double wim = image[r].imag();
            cre[l] = wre * ph.e0_re[r] - wim * ph.e0_im[r];
            cim[l] = wre * ph.e0_im[r] + wim * ph.e0_re[r];
            pre[l] = ph.st_re[r];
            pim[l] = ph.st_im[r];
        }
        for (int j = 0; j < samples; ++j) {
            double* ar = acc_re.data() + static_cast<std::size_t>(j) * kBlock;
            double* ai = acc_im.data() + static_cast<std::size_t>(j) * kBlock;
#pragma omp simd aligned(cre, cim, pre, pim : 64)
            for (int l = 0; l < kBlock; ++l) {
                ar[l] += cre[l];
                ai[l] += cim[l];
                const double t = cre[l] * pre[l] - cim[l] * pim[l];
                cim[l] = cre[l] * pim[l] + cim[l] * pre[l];
                cre[l] = t;
            }
        }
    }
    for (std::size_t r = blocks * kBlock; r < np; ++r) {
        cplx c = image[r] * cplx(ph.e0_re[r], ph.e0_im[r]);
        const cplx p(ph.st_re[r], ph.st_im[r]);
        for (int j = 0; j < samples; ++j) {
            acc_re[static_cast<std::size_t>(j) * kBlock] += c.real();
            acc_im[static_cast<std::size_t>(j) * kBlock] += c.imag();
            c *= p;
        }
    }

    for (int j = 0; j < samples; ++j) {
        double sr = 0.0, si = 0.0;
        const double* ar = acc_re.data() + static_cast<std::size_t>(j) * kBlock;
        const double* ai = acc_im.data() + static_cast<std::size_t>(j) * kBlock;
        for (int l = 0; l < kBlock; ++l) {
            sr += ar[l];
            si += ai[l];
        }
        out[j] = cplx(sr, si);
    }
}

void spoke_adjoint_accum_ph(const SpokePhases& ph, const cplx* samples_in, int n, int samples,
                            cplx* image_accum) {
    const std::size_t np = static_cast<std::size_t>(n) * n;
    std::vector<double> y_re(samples), y_im(samples);
    for (int j = 0; j < samples; ++j) {
        y_re[j] = samples_in[j].real();
        y_im[j] = samples_in[j].imag();
    }

    const std::size_t blocks = np / kBlock;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t r0 = b * kBlock;
        alignas(64) double cre[kBlock], cim[kBlock], pre[kBlock], pim[kBlock];
        alignas(64) double gre[kBlock] = {0.0}, gim[kBlock] = {0.0};
        for (int l = 0; l < kBlock; ++l) {
            const std::size_t r = r0 + l;
            cre[l] = ph.e0_re[r];
            cim[l] = -ph.e0_im[r];  // conjugate kernel
            pre[l] = ph.st_re[r];
            pim[l] = -ph.st_im[r];
        }
        for (int j = 0; j < samples; ++j) {
            const double yr = y_re[j];
            const double yi = y_im[j];
#pragma omp simd aligned(cre, cim, pre, pim, gre, gim : 64)
            for (int l = 0; l < kBlock; ++l) {
                gre[l] += yr * cre[l] - yi * cim[l];
                gim[l] += yr * cim[l] + yi * cre[l];
                const double t = cre[l] * pre[l] - cim[l] * pim[l];
                cim[l] = cre[l] * pim[l] + cim[l] * pre[l];
                cre[l] = t;
            }
        }
        for (int l = 0; l < kBlock; ++l) image_accum[r0 + l] += cplx(gre[l], gim[l]);
    }
    for (std::size_t r = blocks * kBlock; r < np; ++r) {
        cplx c(ph.e0_re[r], -ph.e0_im[r]);
        const cplx p(ph.st_re[r], -ph.st_im[r]);
        cplx g(0.0, 0.0);
        for (int j = 0; j < samples; ++j) {
            g += samples_in[j] * c;
            c *= p;
        }
        image_accum[r] += g;
    }
}

} // namespace

namespace detail {

void spoke_forward(const cplx* image, int n, double angle, int samples, double k_max,
                   cplx* out) {
    if (samples < 2) throw std::invalid_argument("spoke_forward: need >= 2 samples");
    SpokePhases ph;
    build_spoke_phases(n, angle, samples, k_max, ph);
    spoke_forward_ph(ph, image, n, samples, out);
}

void spoke_adjoint_accum(const cplx* samples_in, int n, double angle, int samples,
                         double k_max, cplx* image_accum) {
    if (samples < 2) throw std::invalid_argument("spoke_adjoint_accum: need >= 2 samples");
    SpokePhases ph;
    build_spoke_phases(n, angle, samples, k_max, ph);
    spoke_adjoint_accum_ph(ph, samples_in, n, samples, image_accum);
}

} // namespace detail

void SessionDataset::validate() const {
    if (kspace.size() != navigators.size())
        throw std::runtime_error("SessionDataset: kspace/navigator frame mismatch");
    if (frame_count() != plan.frame_count())
        throw std::runtime_error("SessionDataset: frame count does not match plan");
    const std::int64_t expected_entries = plan.imaging_spoke_count + plan.frame_count();
    if (static_cast<std::int64_t>(trajectory.entries.size()) != expected_entries)
        throw std::runtime_error("SessionDataset: trajectory does not match interleave pattern");
}

RVec density_weights(int samples_per_spoke) {
    if (samples_per_spoke < 2)
        throw std::invalid_argument("density_weights: samples_per_spoke must be >= 2");
    const int s = samples_per_spoke;
    RVec w(s);
    double min_nonzero = 1.0;
    for (int j = 0; j < s; ++j) {
        const double k = -0.5 + static_cast<double>(j) / (s - 1);
        w[j] = std::abs(k) / 0.5;
        if (w[j] > 0.0) min_nonzero = std::min(min_nonzero, w[j]);
    }
    for (int j = 0; j < s; ++j)
        if (w[j] == 0.0) w[j] = 0.5 * min_nonzero;
    return w;
}

EncodingOperator make_operator(const CoilMaps& coils,
                               std::vector<std::array<double, 2>> frame_angles,
                               int samples_per_spoke) {
    EncodingOperator op;
    op.coil_maps = coils.maps;
    op.grid_size = coils.grid_size;
    op.samples_per_spoke = samples_per_spoke;
    op.frame_angles = std::move(frame_angles);
    op.weights = density_weights(samples_per_spoke);
    return op;
}

EncodingOperator make_operator(const CoilMaps& coils, std::span<const SessionDataset> datasets) {
    std::vector<std::array<double, 2>> angles;
    int s = -1;
    for (const auto& ds : datasets) {
        if (s < 0)
            s = ds.samples_per_spoke();
        else if (s != ds.samples_per_spoke())
            throw std::invalid_argument("make_operator: samples_per_spoke differs across sessions");
        for (std::int64_t f = 0; f < ds.frame_count(); ++f)
            angles.push_back(ds.trajectory.frame_angles(f));
    }
    if (s < 0) throw std::invalid_argument("make_operator: no datasets");
    return make_operator(coils, std::move(angles), s);
}

CMat nudft_forward(const CVec& image, const EncodingOperator& op, std::int64_t frame) {
    const int n = op.grid_size;
    const int s = op.samples_per_spoke;
    const int c = op.coil_count();
    if (image.size() != static_cast<Eigen::Index>(n) * n)
        throw std::invalid_argument("nudft_forward: image size does not match operator grid");
    if (frame < 0 || frame >= op.frame_count())
        throw std::out_of_range("nudft_forward: frame out of range");

    CMat out(2 * s, c);
    CMat weighted(image.size(), c);
    for (int ci = 0; ci < c; ++ci)
        weighted.col(ci) = op.coil_maps.col(ci).cwiseProduct(image);
    SpokePhases ph;
    for (int sp = 0; sp < 2; ++sp) {
        build_spoke_phases(n, op.frame_angles[frame][sp], s, op.k_max, ph);
        for (int ci = 0; ci < c; ++ci)
            spoke_forward_ph(ph, weighted.col(ci).data(), n, s, out.col(ci).data() + sp * s);
    }
    return out;
}

CVec nudft_adjoint(const CMat& samples, const EncodingOperator& op, std::int64_t frame) {
    const int n = op.grid_size;
    const int s = op.samples_per_spoke;
    const int c = op.coil_count();
    if (samples.rows() != 2 * s || samples.cols() != c)
        throw std::invalid_argument("nudft_adjoint: sample block has wrong dimensions");
    if (frame < 0 || frame >= op.frame_count())
        throw std::out_of_range("nudft_adjoint: frame out of range");

    CMat g = CMat::Zero(static_cast<Eigen::Index>(n) * n, c);
    SpokePhases ph;
    for (int sp = 0; sp < 2; ++sp) {
        build_spoke_phases(n, op.frame_angles[frame][sp], s, op.k_max, ph);
        for (int ci = 0; ci < c; ++ci)
            spoke_adjoint_accum_ph(ph, samples.col(ci).data() + sp * s, n, s, g.col(ci).data());
    }
    CVec image = CVec::Zero(static_cast<Eigen::Index>(n) * n);
    for (int ci = 0; ci < c; ++ci)
        image += op.coil_maps.col(ci).conjugate().cwiseProduct(g.col(ci));
    return image;
}

SessionDataset acquire_session(const PhantomSpec& spec, const SessionVariation& variation,
                               const SessionSpokePlan& plan, const EncodingOperator& op,
                               double noise_sigma, std::uint64_t seed) {
    spec.validate();
    variation.validate();
    if (spec.grid_size != op.grid_size)
        throw std::invalid_argument("acquire_session: phantom and operator grids differ");
    if (noise_sigma < 0.0) throw std::invalid_argument("acquire_session: negative noise sigma");

    const int n = op.grid_size;
    const int s = op.samples_per_spoke;
    const int c = op.coil_count();
    const std::int64_t frames = plan.frame_count();

    SessionDataset ds;
    ds.trajectory = build_navi_trajectory(plan.imaging_spoke_count, s, plan.first_index);
    ds.plan = plan;
    ds.noise_sigma = noise_sigma;
    ds.kspace.resize(frames);
    ds.navigators.resize(frames);

    const double sigma_component = noise_sigma / std::sqrt(2.0);

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t f = 0; f < frames; ++f) {
        const std::int64_t t = plan.first_frame_time() + f;
        const RVec truth = render_frame(spec, variation, static_cast<double>(t));
        const CVec img = truth.cast<cplx>();
        const auto angles = ds.trajectory.frame_angles(f);

        CMat k(2 * s, c);
        CMat nav(s, c);
        CMat weighted(img.size(), c);
        for (int ci = 0; ci < c; ++ci)
            weighted.col(ci) = op.coil_maps.col(ci).cwiseProduct(img);
        SpokePhases ph;
        for (int sp = 0; sp < 3; ++sp) {
            build_spoke_phases(n, sp < 2 ? angles[sp] : 0.0, s, op.k_max, ph);
            for (int ci = 0; ci < c; ++ci) {
                cplx* dst = sp < 2 ? k.col(ci).data() + sp * s : nav.col(ci).data();
                spoke_forward_ph(ph, weighted.col(ci).data(), n, s, dst);
            }
        }

        if (noise_sigma > 0.0) {
            std::mt19937_64 rng(noise_key(seed, plan.session_id, t));
            std::normal_distribution<double> g(0.0, sigma_component);
            for (int ci = 0; ci < c; ++ci) {
                for (int j = 0; j < 2 * s; ++j) k(j, ci) += cplx(g(rng), g(rng));
                for (int j = 0; j < s; ++j) nav(j, ci) += cplx(g(rng), g(rng));
            }
        }
        ds.kspace[f] = std::move(k);
        ds.navigators[f] = std::move(nav);
    }
    return ds;
}

void save_dataset(const SessionDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::int64_t t = ds.frame_count();
    const int s = ds.samples_per_spoke();
    const int c = ds.coil_count();

    std::vector<cplx> buf(static_cast<std::size_t>(t) * 2 * s * c);
    for (std::int64_t f = 0; f < t; ++f)
        for (int sp = 0; sp < 2; ++sp)
            for (int j = 0; j < s; ++j)
                for (int ci = 0; ci < c; ++ci)
                    buf[((static_cast<std::size_t>(f) * 2 + sp) * s + j) * c + ci] =
                        ds.kspace[f](sp * s + j, ci);
    save_array(dir / "kspace.lra", buf.data(),
               {static_cast<std::uint64_t>(t), 2, static_cast<std::uint64_t>(s),
                static_cast<std::uint64_t>(c)});

    buf.resize(static_cast<std::size_t>(t) * s * c);
    for (std::int64_t f = 0; f < t; ++f)
        for (int j = 0; j < s; ++j)
            for (int ci = 0; ci < c; ++ci)
                buf[(static_cast<std::size_t>(f) * s + j) * c + ci] = ds.navigators[f](j, ci);
    save_array(dir / "navigators.lra", buf.data(),
               {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(s),
                static_cast<std::uint64_t>(c)});

    save_trajectory(ds.trajectory, ds.plan, dir / "trajectory");

    nlohmann::json j;
    j["dims"] = {t, 2, s, c};
    j["dtype"] = "c128";
    j["session_id"] = ds.plan.session_id;
    j["policy"] = ds.plan.policy == SpokePolicy::non_repeating ? "non_repeating" : "repeating";
    j["index_range"] = {ds.plan.first_index, ds.plan.end_index()};
    j["noise_sigma"] = ds.noise_sigma;
    if (ds.applied_transform) {
        j["applied_transform"] = {{"dx", ds.applied_transform->dx},
                                  {"dy", ds.applied_transform->dy},
                                  {"dtheta", ds.applied_transform->dtheta}};
    }
    std::ofstream os(dir / "meta.json");
    if (!os) throw std::runtime_error("save_dataset: cannot write meta.json");
    os << j.dump(2) << "\n";
}

} // namespace longrad
