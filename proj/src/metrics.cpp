#include "longrad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace longrad {

namespace {

constexpr int kWindow = 7;

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const double front = std::exp(lbeta + a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

} // namespace

double student_t_upper_tail(double t, double dof) {
    if (dof <= 0.0) throw std::invalid_argument("student_t_upper_tail: dof must be positive");
    const double x = dof / (dof + t * t);
    const double half_two_tail = 0.5 * betai(0.5 * dof, 0.5, x);
    return t >= 0.0 ? half_two_tail : 1.0 - half_two_tail;
}

double ssim(const RMat& x, const RMat& ref) {
    if (x.rows() != ref.rows() || x.cols() != ref.cols())
        throw std::invalid_argument("ssim: image dimensions differ");
    if (x.rows() < kWindow || x.cols() < kWindow)
        throw std::invalid_argument("ssim: image smaller than the 7x7 window");
    const double L = ref.maxCoeff();
    if (L <= ref.minCoeff())
        throw std::invalid_argument("ssim: reference has zero dynamic range");
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);
    const double inv_n = 1.0 / (kWindow * kWindow);

    double acc = 0.0;
    std::int64_t count = 0;
    for (Eigen::Index i = 0; i + kWindow <= x.rows(); ++i) {
        for (Eigen::Index j = 0; j + kWindow <= x.cols(); ++j) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int wi = 0; wi < kWindow; ++wi)
                for (int wj = 0; wj < kWindow; ++wj) {
                    const double xv = x(i + wi, j + wj);
                    const double yv = ref(i + wi, j + wj);
                    sx += xv;
                    sy += yv;
                    sxx += xv * xv;
                    syy += yv * yv;
                    sxy += xv * yv;
                }
            const double mx = sx * inv_n;
            const double my = sy * inv_n;
            const double vx = sxx * inv_n - mx * mx;
            const double vy = syy * inv_n - my * my;
            const double cxy = sxy * inv_n - mx * my;
            const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
            const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            acc += num / den;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

double nrmse(const RMat& x, const RMat& ref) {
    if (x.rows() != ref.rows() || x.cols() != ref.cols())
        throw std::invalid_argument("nrmse: image dimensions differ");
    const double denom = ref.norm();
    if (denom == 0.0) throw std::invalid_argument("nrmse: reference has zero norm");
    return (x - ref).norm() / denom;
}

TTestResult paired_ttest_onetail(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("paired_ttest_onetail: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("paired_ttest_onetail: need at least two pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult r;
    r.dof = static_cast<int>(n) - 1;
    if (sd == 0.0) {
        r.degenerate = true;
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 0.5;
        } else {
            r.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
            r.p = mean > 0.0 ? 1e-13 : 1.0 - 1e-13;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p = student_t_upper_tail(r.t, r.dof);
    return r;
}

std::string significance_stars(double p) {
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

std::pair<double, double> MetricsReport::summary(const std::string& mode, int session,
                                                 bool use_ssim) const {
    double sum = 0.0, sum2 = 0.0;
    std::int64_t n = 0;
    for (const auto& row : per_frame) {
        if (row.mode != mode) continue;
        if (session != 0 && row.session != session) continue;
        const double v = use_ssim ? row.ssim : row.nrmse;
        sum += v;
        sum2 += v * v;
        ++n;
    }
    if (n == 0) return {0.0, 0.0};
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
    return {mean, std::sqrt(var)};
}

void MetricsReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("MetricsReport: cannot open " + path.string());
    os << "# longrad-metrics v1\n";
    os << "seed,mode,session,frame,ssim,nrmse\n";
    os << std::setprecision(17);
    for (const auto& r : per_frame)
        os << r.seed << ',' << r.mode << ',' << r.session << ',' << r.frame << ',' << r.ssim
           << ',' << r.nrmse << '\n';
}

void MetricsReport::write_summary(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("MetricsReport: cannot open " + path.string());

    std::vector<std::pair<std::string, int>> groups;
    for (const auto& r : per_frame) {
        const auto key = std::make_pair(r.mode, r.session);
        if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
    }
    os << "metric means +- std over frames and seeds\n";
    for (const auto& [mode, session] : groups) {
        const auto [ms, ss] = summary(mode, session, true);
        const auto [mn, sn] = summary(mode, session, false);
        os << std::left << std::setw(22) << mode << " session " << session << "  ssim "
           << std::fixed << std::setprecision(4) << ms << " +- " << ss << "  nrmse " << mn
           << " +- " << sn << "\n";
    }
    if (!tests.empty()) {
        os << "\none-tail paired t-tests (* p<0.05, ** p<0.01)\n";
        for (const auto& t : tests) {
            os << std::left << std::setw(44) << t.label << " ssim: t=" << std::fixed
               << std::setprecision(3) << t.ssim_test.t << " dof=" << t.ssim_test.dof
               << " p=" << std::scientific << std::setprecision(3) << t.ssim_test.p
               << significance_stars(t.ssim_test.p) << "  nrmse: t=" << std::fixed
               << t.nrmse_test.t << " p=" << std::scientific << t.nrmse_test.p
               << significance_stars(t.nrmse_test.p);
            if (t.ssim_test.degenerate || t.nrmse_test.degenerate) os << " [degenerate]";
            os << "\n";
        }
    }
}

} // namespace longrad
