#include "longrad/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace longrad {

namespace {

constexpr double kPi = std::numbers::pi_v<double>;

struct PlacedEllipse {
    double cx, cy, ax, ay, cosr, sinr;

    bool contains(double x, double y) const {
        const double u = x - cx;
        const double v = y - cy;
        const double xr = u * cosr + v * sinr;
        const double yr = -u * sinr + v * cosr;
        const double nx = xr / ax;
        const double ny = yr / ay;
        return nx * nx + ny * ny <= 1.0;
    }
};

PlacedEllipse place(const Ellipse& e, const SessionVariation& var, bool scale_contour,
                    double displacement, int grid) {
    PlacedEllipse p;
    const double s = scale_contour ? var.contour_scale : 1.0;
    p.cx = e.cx + var.dx;
    p.cy = e.cy + e.motion_gain * displacement + var.dy;
    p.ax = e.ax * s;
    p.ay = e.ay * s;
    p.cosr = std::cos(e.rotation);
    p.sinr = std::sin(e.rotation);

    // Bounding box of the rotated ellipse must stay inside the field of view.
    const double hx = std::sqrt(p.ax * p.ax * p.cosr * p.cosr + p.ay * p.ay * p.sinr * p.sinr);
    const double hy = std::sqrt(p.ax * p.ax * p.sinr * p.sinr + p.ay * p.ay * p.cosr * p.cosr);
    const double half = grid / 2.0;
    if (std::abs(p.cx) + hx > half || std::abs(p.cy) + hy > half)
        throw std::runtime_error("render_frame: displaced ellipse exits the field of view");
    return p;
}

} // namespace

void PhantomSpec::validate() const {
    if (grid_size < 8) throw std::invalid_argument("PhantomSpec: grid_size too small");
    if (ellipses.empty()) throw std::invalid_argument("PhantomSpec: no ellipses");
    for (const auto& e : ellipses) {
        if (e.intensity < 0.0 || e.intensity > 1.0)
            throw std::invalid_argument("PhantomSpec: ellipse intensity outside [0, 1]");
        if (e.ax <= 0.0 || e.ay <= 0.0)
            throw std::invalid_argument("PhantomSpec: nonpositive semi-axis");
    }
    if (lesion) {
        double base_max = 0.0;
        for (const auto& e : ellipses) base_max = std::max(base_max, e.intensity);
        if (base_max + lesion->intensity_delta > 1.2 || base_max + lesion->intensity_delta < 0.0)
            throw std::invalid_argument("PhantomSpec: lesion pushes composite outside [0, 1.2]");
    }
    if (respiration.period <= 0.0)
        throw std::invalid_argument("PhantomSpec: respiration period must be positive");
}

void SessionVariation::validate() const {
    if (contour_scale < 0.8 || contour_scale > 1.2)
        throw std::invalid_argument("SessionVariation: contour_scale outside [0.8, 1.2]");
    if (fat_intensity_factor < 0.0)
        throw std::invalid_argument("SessionVariation: negative fat_intensity_factor");
}

double respiration_displacement(const Respiration& r, const SessionVariation& var, double t) {
    return r.amplitude * std::sin(2.0 * kPi * (t + var.respiration_phase_offset) / r.period) +
           r.drift * t;
}

RVec render_frame(const PhantomSpec& spec, const SessionVariation& var, double t) {
    if (t < 0.0) throw std::invalid_argument("render_frame: negative time");
    const int n = spec.grid_size;
    const double disp = respiration_displacement(spec.respiration, var, t);

    RVec img = RVec::Zero(static_cast<Eigen::Index>(n) * n);

    for (std::size_t k = 0; k < spec.ellipses.size(); ++k) {
        const Ellipse& e = spec.ellipses[k];
        if (e.fat) continue;
        const PlacedEllipse p = place(e, var, k == 0, disp, n);
        for (int i = 0; i < n; ++i) {
            const double y = i - n / 2;
            for (int j = 0; j < n; ++j) {
                const double x = j - n / 2;
                if (p.contains(x, y)) img[static_cast<Eigen::Index>(i) * n + j] = e.intensity;
            }
        }
    }

    if (var.fat_intensity_factor != 0.0) {
        for (std::size_t k = 0; k < spec.ellipses.size(); ++k) {
            const Ellipse& e = spec.ellipses[k];
            if (!e.fat) continue;
            const PlacedEllipse p = place(e, var, k == 0, disp, n);
            const double add = e.intensity * var.fat_intensity_factor;
            for (int i = 0; i < n; ++i) {
                const double y = i - n / 2;
                for (int j = 0; j < n; ++j) {
                    const double x = j - n / 2;
                    if (p.contains(x, y)) img[static_cast<Eigen::Index>(i) * n + j] += add;
                }
            }
        }
    }

    if (spec.lesion && spec.lesion->intensity_delta != 0.0) {
        const Lesion& l = *spec.lesion;
        const double lcx = l.cx + var.dx;
        const double lcy = l.cy + disp + var.dy;  // lesion moves with unit gain
        const double r2 = l.radius * l.radius;
        for (int i = 0; i < n; ++i) {
            const double y = i - n / 2;
            for (int j = 0; j < n; ++j) {
                const double x = j - n / 2;
                const double dx = x - lcx;
                const double dy = y - lcy;
                if (dx * dx + dy * dy <= r2)
                    img[static_cast<Eigen::Index>(i) * n + j] += l.intensity_delta;
            }
        }
    }

    return img;
}

RVec lesion_mask(const PhantomSpec& spec, const SessionVariation& var, double t) {
    const int n = spec.grid_size;
    RVec mask = RVec::Zero(static_cast<Eigen::Index>(n) * n);
    if (!spec.lesion) return mask;
    const double disp = respiration_displacement(spec.respiration, var, t);
    const double lcx = spec.lesion->cx + var.dx;
    const double lcy = spec.lesion->cy + disp + var.dy;
    const double r2 = spec.lesion->radius * spec.lesion->radius;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = j - n / 2 - lcx;
            const double y = i - n / 2 - lcy;
            if (x * x + y * y <= r2) mask[static_cast<Eigen::Index>(i) * n + j] = 1.0;
        }
    return mask;
}

RVec fat_mask(const PhantomSpec& spec, const SessionVariation& var, double t) {
    const int n = spec.grid_size;
    const double disp = respiration_displacement(spec.respiration, var, t);
    RVec mask = RVec::Zero(static_cast<Eigen::Index>(n) * n);
    for (std::size_t k = 0; k < spec.ellipses.size(); ++k) {
        const Ellipse& e = spec.ellipses[k];
        if (!e.fat) continue;
        const PlacedEllipse p = place(e, var, k == 0, disp, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (p.contains(j - n / 2, i - n / 2))
                    mask[static_cast<Eigen::Index>(i) * n + j] = 1.0;
    }
    return mask;
}

CoilMaps simulate_coil_maps(int coils, int grid_size, std::uint64_t seed) {
    if (coils < 1) throw std::invalid_argument("simulate_coil_maps: need at least one coil");
    const int n = grid_size;
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    CoilMaps cm;
    cm.grid_size = n;
    cm.maps.resize(static_cast<Eigen::Index>(n) * n, coils);

    const double ring = 0.55 * n;       // coil centers sit just outside the FOV edge
    const double sigma = 0.6 * n;       // Gaussian falloff
    for (int c = 0; c < coils; ++c) {
        const double phi = 2.0 * kPi * c / coils + 0.1 * uni(rng);
        const double ccx = ring * std::cos(phi);
        const double ccy = ring * std::sin(phi);
        // Low-order complex polynomial; constant term kept away from zero so
        // the profile never vanishes.
        const cplx a0(1.0 + 0.2 * uni(rng), 0.2 * uni(rng));
        const cplx a1(0.35 * uni(rng), 0.35 * uni(rng));
        const cplx a2(0.15 * uni(rng), 0.15 * uni(rng));
        for (int i = 0; i < n; ++i) {
            const double y = (i - n / 2) / static_cast<double>(n);
            for (int j = 0; j < n; ++j) {
                const double x = (j - n / 2) / static_cast<double>(n);
                const cplx z(x, y);
                const double dx = (j - n / 2) - ccx;
                const double dy = (i - n / 2) - ccy;
                const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                cm.maps(static_cast<Eigen::Index>(i) * n + j, c) = (a0 + a1 * z + a2 * z * z) * g;
            }
        }
    }

    // Unit root-sum-of-squares everywhere (the disc of radius 0.45*N is the
    // contract; normalizing the whole grid keeps the maps smooth).
    for (Eigen::Index r = 0; r < cm.maps.rows(); ++r) {
        const double rss = std::sqrt(cm.maps.row(r).squaredNorm());
        if (rss <= 0.0) throw std::runtime_error("simulate_coil_maps: degenerate profile");
        cm.maps.row(r) /= rss;
    }
    return cm;
}

PhantomSpec standard_phantom(int grid_size) {
    const double s = grid_size / 64.0;
    PhantomSpec spec;
    spec.grid_size = grid_size;
    spec.ellipses = {
        // body contour
        {0.0, 0.0, 26.0 * s, 28.0 * s, 0.0, 0.50, 0.15, false},
        // liver-like organ, full respiratory gain
        {-10.0 * s, 2.0 * s, 12.0 * s, 9.0 * s, 0.30, 0.75, 1.00, false},
        // spleen/kidney-like organ
        {13.0 * s, -4.0 * s, 6.0 * s, 5.0 * s, -0.20, 0.65, 0.70, false},
        // stomach-like hypointense region
        {2.0 * s, 8.0 * s, 5.0 * s, 4.0 * s, 0.00, 0.25, 0.50, false},
        // small bright vessel
        {-4.0 * s, -10.0 * s, 2.0 * s, 2.0 * s, 0.00, 0.90, 0.60, false},
        // anterior and posterior fat pads (nearly static, additive)
        {0.0, 23.0 * s, 14.0 * s, 3.0 * s, 0.00, 0.30, 0.05, true},
        {0.0, -23.0 * s, 16.0 * s, 3.0 * s, 0.00, 0.30, 0.05, true},
    };
    spec.respiration = {3.0 * s, 50.0, 0.0};
    spec.lesion.reset();
    spec.seed = 0;
    spec.validate();
    return spec;
}

} // namespace longrad
