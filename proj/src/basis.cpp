#include "longrad/basis.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "longrad/array_io.hpp"

namespace longrad {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;

// Adjoint 1D NUDFT of one navigator spoke onto pixel positions
// p = -floor(S/2) .. S-1-floor(S/2).
void navigator_profile(const CMat& nav, double k_max, RVec& out) {
    const int s = static_cast<int>(nav.rows());
    const int c = static_cast<int>(nav.cols());
    const double dk = 2.0 * k_max / (s - 1);
    out.resize(s);
    for (int i = 0; i < s; ++i) {
        const double p = i - s / 2;
        double energy = 0.0;
        for (int ci = 0; ci < c; ++ci) {
            cplx acc(0.0, 0.0);
            for (int j = 0; j < s; ++j) {
                const double k = -k_max + j * dk;
                acc += nav(j, ci) * std::polar(1.0, kTwoPi * k * p);
            }
            energy += std::norm(acc);
        }
        out[i] = std::sqrt(energy);
    }
}

} // namespace

NavigatorProjections navigator_projections(std::span<const SessionDataset> datasets) {
    if (datasets.empty())
        throw std::invalid_argument("navigator_projections: no datasets");
    const int s = datasets.front().samples_per_spoke();
    const int c = datasets.front().coil_count();
    std::int64_t total = 0;
    for (const auto& ds : datasets) {
        if (ds.samples_per_spoke() != s || ds.coil_count() != c)
            throw std::invalid_argument(
                "navigator_projections: sessions have mismatched geometry");
        total += ds.frame_count();
    }

    NavigatorProjections proj;
    proj.P.resize(s, total);
    std::int64_t col = 0;
    for (const auto& ds : datasets) {
        proj.session_boundaries.push_back(col);
        const std::int64_t t = ds.frame_count();
#pragma omp parallel for schedule(static)
        for (std::int64_t f = 0; f < t; ++f) {
            RVec profile;
            navigator_profile(ds.navigators[f], ds.trajectory.k_max, profile);
            proj.P.col(col + f) = profile;
        }
        col += t;
    }
    return proj;
}

TemporalBasis estimate_basis(const NavigatorProjections& proj, int K) {
    const Eigen::Index t = proj.P.cols();
    if (K < 1 || K > t)
        throw std::invalid_argument("estimate_basis: K must be in [1, T]");

    // Uncentered PCA: plain SVD, no column-mean subtraction, so the series
    // mean lives in the first component.
    Eigen::BDCSVD<RMat> svd(proj.P, Eigen::ComputeThinV);
    RMat v = svd.matrixV();  // T x min(S, T)
    RVec sv = svd.singularValues();

    const double tol = sv.size() > 0 ? sv[0] * 1e-12 : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++rank;
    if (K > rank)
        throw std::invalid_argument("estimate_basis: K=" + std::to_string(K) +
                                    " exceeds rank(P)=" + std::to_string(rank));

    // Sign convention: largest-magnitude entry of each column real-positive.
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        Eigen::Index imax = 0;
        v.col(k).cwiseAbs().maxCoeff(&imax);
        if (v(imax, k) < 0.0) v.col(k) = -v.col(k);
    }

    TemporalBasis basis;
    basis.U = v;
    basis.U_K = v.leftCols(K);
    basis.K = K;
    basis.singular_values = sv;
    basis.session_boundaries = proj.session_boundaries;
    return basis;
}

void save_basis(const TemporalBasis& basis, const std::filesystem::path& stem) {
    auto uk = stem;
    uk += "_uk.lra";
    save_matrix(uk, basis.U_K);
    auto sv = stem;
    sv += "_sv.lra";
    save_array(sv, basis.singular_values.data(),
               {static_cast<std::uint64_t>(basis.singular_values.size())});

    nlohmann::json j;
    j["K"] = basis.K;
    j["frames"] = basis.frame_count();
    j["session_boundaries"] = basis.session_boundaries;
    auto side = stem;
    side += ".json";
    std::ofstream os(side);
    if (!os) throw std::runtime_error("save_basis: cannot write sidecar");
    os << j.dump(2) << "\n";
}

} // namespace longrad
