#include "longrad/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace longrad {

namespace {

struct Problem {
    const EncodingOperator* op = nullptr;
    std::vector<const CMat*> y;  // per concatenated frame
    std::int64_t T = 0;
    Eigen::Index n2 = 0;
    int S = 0, C = 0;
    RVec w_frame;  // per-sample weights for one frame block (both spokes)
    CMat Uc;       // U_K cast to complex, T x K
    std::vector<char> masked_diff;  // length max(T-1,0); 1 = boundary diff excluded
};

Problem make_problem(std::span<const SessionDataset> datasets, const EncodingOperator& op,
                     const TemporalBasis& basis, const ReconConfig& cfg) {
    Problem p;
    p.op = &op;
    for (const auto& ds : datasets)
        for (std::int64_t f = 0; f < ds.frame_count(); ++f) p.y.push_back(&ds.kspace[f]);
    p.T = static_cast<std::int64_t>(p.y.size());
    if (p.T == 0) throw std::invalid_argument("solver: no frames");
    if (op.frame_count() != p.T)
        throw std::invalid_argument("solver: operator frame count does not match data");
    if (basis.frame_count() != p.T)
        throw std::invalid_argument("solver: basis frame count does not match data");
    p.n2 = static_cast<Eigen::Index>(op.grid_size) * op.grid_size;
    p.S = op.samples_per_spoke;
    p.C = op.coil_count();
    p.w_frame.resize(2 * p.S);
    p.w_frame.head(p.S) = op.weights;
    p.w_frame.tail(p.S) = op.weights;
    p.Uc = basis.U_K.cast<cplx>();

    if (p.T > 1) {
        p.masked_diff.assign(static_cast<std::size_t>(p.T - 1), 0);
        if (cfg.mask_session_boundaries) {
            for (auto b : basis.session_boundaries)
                if (b > 0 && b < p.T) p.masked_diff[static_cast<std::size_t>(b - 1)] = 1;
        }
    }
    return p;
}

void check_config(const ReconConfig& cfg) {
    if (cfg.lambda_t < 0.0 || cfg.lambda_s < 0.0 || cfg.l1_smoothing_eps <= 0.0)
        throw std::invalid_argument(
            "solver: lambda_t, lambda_s and l1_smoothing_eps must be resolved to "
            "concrete values here (reconstruct() resolves negative sentinels)");
    if (cfg.K < 1) throw std::invalid_argument("solver: K must be >= 1");
}

// E applied frame-by-frame to the columns of M (N^2 x T).
void forward_sweep(const Problem& p, const CMat& M, std::vector<CMat>& F) {
    F.resize(static_cast<std::size_t>(p.T));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t f = 0; f < p.T; ++f)
        F[static_cast<std::size_t>(f)] = nudft_forward(M.col(f), *p.op, f);
}

// Adjoint of the per-frame residual blocks into an N^2 x T slab.
void adjoint_sweep(const Problem& p, const std::vector<CMat>& R, CMat& A) {
    A.resize(p.n2, p.T);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t f = 0; f < p.T; ++f)
        A.col(f) = nudft_adjoint(R[static_cast<std::size_t>(f)], *p.op, f);
}

double data_term(const Problem& p, const std::vector<CMat>& F, double alpha,
                 const std::vector<CMat>* Fd) {
    // Per-frame partials summed sequentially for determinism.
    RVec partial = RVec::Zero(p.T);
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < p.T; ++f) {
        const CMat& base = F[static_cast<std::size_t>(f)];
        const CMat& yf = *p.y[static_cast<std::size_t>(f)];
        double acc = 0.0;
        for (int c = 0; c < p.C; ++c)
            for (int j = 0; j < 2 * p.S; ++j) {
                cplx r = base(j, c) - yf(j, c);
                if (Fd) r += alpha * (*Fd)[static_cast<std::size_t>(f)](j, c);
                acc += p.w_frame[j] * std::norm(r);
            }
        partial[f] = acc;
    }
    return 0.5 * partial.sum();
}

double smooth_abs_sum(const CMat& Z, double eps) {
    const double e2 = eps * eps;
    double acc = 0.0;
    const cplx* d = Z.data();
    const Eigen::Index n = Z.size();
    for (Eigen::Index i = 0; i < n; ++i) acc += std::sqrt(std::norm(d[i]) + e2);
    return acc;
}

// sum phi(DV + alpha*DD) over unmasked temporal differences.
double temporal_term(const Problem& p, const CMat& DV, double alpha, const CMat* DD,
                     double eps) {
    if (p.T < 2) return 0.0;
    const double e2 = eps * eps;
    RVec partial = RVec::Zero(p.T - 1);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < p.T - 1; ++t) {
        if (p.masked_diff[static_cast<std::size_t>(t)]) continue;
        double acc = 0.0;
        const cplx* v = DV.col(t).data();
        const cplx* d = DD ? DD->col(t).data() : nullptr;
        for (Eigen::Index r = 0; r < p.n2; ++r) {
            const cplx z = d ? v[r] + alpha * d[r] : v[r];
            acc += std::sqrt(std::norm(z) + e2);
        }
        partial[t] = acc;
    }
    return partial.sum();
}

// Forward spatial differences of each coefficient map, zero at the far
// boundary; x varies along j (columns of the image), y along i.
void spatial_diffs(const CMat& V, int n, CMat& gx, CMat& gy) {
    const Eigen::Index k = V.cols();
    gx.setZero(V.rows(), k);
    gy.setZero(V.rows(), k);
    for (Eigen::Index kk = 0; kk < k; ++kk) {
        const cplx* v = V.col(kk).data();
        cplx* px = gx.col(kk).data();
        cplx* py = gy.col(kk).data();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Eigen::Index r = static_cast<Eigen::Index>(i) * n + j;
                if (j < n - 1) px[r] = v[r + 1] - v[r];
                if (i < n - 1) py[r] = v[r + n] - v[r];
            }
    }
}

double spatial_term(const CMat& gxV, const CMat& gyV, double alpha, const CMat* gxD,
                    const CMat* gyD, double eps) {
    const double e2 = eps * eps;
    double acc = 0.0;
    const Eigen::Index n = gxV.size();
    const cplx* xv = gxV.data();
    const cplx* yv = gyV.data();
    const cplx* xd = gxD ? gxD->data() : nullptr;
    const cplx* yd = gyD ? gyD->data() : nullptr;
    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx zx = xd ? xv[i] + alpha * xd[i] : xv[i];
        const cplx zy = yd ? yv[i] + alpha * yd[i] : yv[i];
        acc += std::sqrt(std::norm(zx) + e2) + std::sqrt(std::norm(zy) + e2);
    }
    return acc;
}

// psi(z) = z / sqrt(|z|^2 + eps^2), applied in place.
void apply_psi(CMat& Z, double eps) {
    const double e2 = eps * eps;
    cplx* d = Z.data();
    const Eigen::Index n = Z.size();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) d[i] /= std::sqrt(std::norm(d[i]) + e2);
}

// Temporal differences of M into a (T-1)-column slab.
void temporal_diffs(const Problem& p, const CMat& M, CMat& D) {
    if (p.T < 2) {
        D.resize(p.n2, 0);
        return;
    }
    D.resize(p.n2, p.T - 1);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < p.T - 1; ++t) {
        if (p.masked_diff[static_cast<std::size_t>(t)])
            D.col(t).setZero();
        else
            D.col(t) = M.col(t + 1) - M.col(t);
    }
}

// S_t' applied to psi-values: out(t) = psi(t-1) - psi(t), psi(-1)=psi(T-1)=0.
void temporal_adjoint(const Problem& p, const CMat& Psi, CMat& Out) {
    Out.setZero(p.n2, p.T);
    if (p.T < 2) return;
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < p.T; ++t) {
        if (t < p.T - 1 && !p.masked_diff[static_cast<std::size_t>(t)]) Out.col(t) -= Psi.col(t);
        if (t > 0 && !p.masked_diff[static_cast<std::size_t>(t - 1)]) Out.col(t) += Psi.col(t - 1);
    }
}

// Negative divergence matching spatial_diffs.
void spatial_adjoint(const CMat& psix, const CMat& psiy, int n, CMat& out) {
    out.setZero(psix.rows(), psix.cols());
    for (Eigen::Index kk = 0; kk < psix.cols(); ++kk) {
        const cplx* px = psix.col(kk).data();
        const cplx* py = psiy.col(kk).data();
        cplx* o = out.col(kk).data();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Eigen::Index r = static_cast<Eigen::Index>(i) * n + j;
                cplx acc(0.0, 0.0);
                if (j < n - 1) acc -= px[r];
                if (j > 0) acc += px[r - 1];
                if (i < n - 1) acc -= py[r];
                if (i > 0) acc += py[r - n];
                o[r] = acc;
            }
    }
}

double rdot(const CMat& a, const CMat& b) {
    return a.cwiseProduct(b.conjugate()).sum().real();
}

struct Workspace {
    CMat M_V, M_D;          // N^2 x T
    CMat DV, DD;            // temporal diffs, N^2 x (T-1)
    CMat gxV, gyV, gxD, gyD;  // spatial diffs of V and D
    std::vector<CMat> F_V, F_D;
    CMat A;                 // adjoint slab
};

double cached_objective(const Problem& p, const Workspace& w, double alpha, bool with_dir,
                        double lt, double ls, double eps) {
    const double data = with_dir ? data_term(p, w.F_V, alpha, &w.F_D)
                                 : data_term(p, w.F_V, 0.0, nullptr);
    const double tv_t = with_dir ? temporal_term(p, w.DV, alpha, &w.DD, eps)
                                 : temporal_term(p, w.DV, 0.0, nullptr, eps);
    const double tv_s = with_dir ? spatial_term(w.gxV, w.gyV, alpha, &w.gxD, &w.gyD, eps)
                                 : spatial_term(w.gxV, w.gyV, 0.0, nullptr, nullptr, eps);
    return data + lt * tv_t + ls * tv_s;
}

CMat cached_gradient(const Problem& p, Workspace& w, const CMat& V, double lt, double ls,
                     double eps, int n) {
    // Data term: E'(W.(E(VU') - y)) U_K
    std::vector<CMat> R(static_cast<std::size_t>(p.T));
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < p.T; ++f) {
        const CMat& yf = *p.y[static_cast<std::size_t>(f)];
        CMat r = w.F_V[static_cast<std::size_t>(f)] - yf;
        for (int c = 0; c < p.C; ++c)
            for (int j = 0; j < 2 * p.S; ++j) r(j, c) *= p.w_frame[j];
        R[static_cast<std::size_t>(f)] = std::move(r);
    }
    adjoint_sweep(p, R, w.A);
    CMat G = w.A * p.Uc;

    if (lt > 0.0 && p.T > 1) {
        CMat psi = w.DV;
        apply_psi(psi, eps);
        CMat st(p.n2, p.T);
        temporal_adjoint(p, psi, st);
        G.noalias() += lt * (st * p.Uc);
    }
    if (ls > 0.0) {
        CMat psix = w.gxV, psiy = w.gyV;
        apply_psi(psix, eps);
        apply_psi(psiy, eps);
        CMat ss;
        spatial_adjoint(psix, psiy, n, ss);
        G += ls * ss;
    }
    return G;
}

double median_abs(const CMat& V) {
    std::vector<double> mags(static_cast<std::size_t>(V.size()));
    for (Eigen::Index i = 0; i < V.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(V.data()[i]);
    auto mid = mags.begin() + mags.size() / 2;
    std::nth_element(mags.begin(), mid, mags.end());
    return *mid;
}

} // namespace

CMat adjoint_init(std::span<const SessionDataset> datasets, const EncodingOperator& op,
                  const TemporalBasis& basis) {
    ReconConfig dummy;
    dummy.lambda_t = 0.0;
    dummy.lambda_s = 0.0;
    dummy.l1_smoothing_eps = 1.0;
    Problem p = make_problem(datasets, op, basis, dummy);

    // Scale so the adjoint approximates image magnitudes: the radial area
    // element is |k| dk dtheta with |k| = k_max * W (W is the normalized
    // ramp, already multiplied in below) and dtheta = pi/2 for two spokes
    // per frame.
    const double dk = 2.0 * op.k_max / (p.S - 1);
    const double dtheta = std::numbers::pi_v<double> / 2.0;
    const double scale = op.k_max * dk * dtheta;

    std::vector<CMat> R(static_cast<std::size_t>(p.T));
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < p.T; ++f) {
        CMat r = *p.y[static_cast<std::size_t>(f)];
        for (int c = 0; c < p.C; ++c)
            for (int j = 0; j < 2 * p.S; ++j) r(j, c) *= p.w_frame[j];
        R[static_cast<std::size_t>(f)] = std::move(r);
    }
    CMat A;
    adjoint_sweep(p, R, A);
    return scale * (A * p.Uc);
}

double objective(const CMat& V, std::span<const SessionDataset> datasets,
                 const EncodingOperator& op, const TemporalBasis& basis,
                 const ReconConfig& cfg) {
    check_config(cfg);
    Problem p = make_problem(datasets, op, basis, cfg);
    if (V.rows() != p.n2 || V.cols() != basis.K)
        throw std::invalid_argument("objective: V has wrong shape");

    Workspace w;
    w.M_V.noalias() = V * p.Uc.transpose();
    forward_sweep(p, w.M_V, w.F_V);
    temporal_diffs(p, w.M_V, w.DV);
    spatial_diffs(V, op.grid_size, w.gxV, w.gyV);
    const double obj =
        cached_objective(p, w, 0.0, false, cfg.lambda_t, cfg.lambda_s, cfg.l1_smoothing_eps);
    if (!std::isfinite(obj))
        throw std::runtime_error("objective: non-finite value (|V|_max = " +
                                 std::to_string(V.cwiseAbs().maxCoeff()) + ")");
    return obj;
}

CMat gradient(const CMat& V, std::span<const SessionDataset> datasets,
              const EncodingOperator& op, const TemporalBasis& basis, const ReconConfig& cfg) {
    check_config(cfg);
    Problem p = make_problem(datasets, op, basis, cfg);
    if (V.rows() != p.n2 || V.cols() != basis.K)
        throw std::invalid_argument("gradient: V has wrong shape");

    Workspace w;
    w.M_V.noalias() = V * p.Uc.transpose();
    forward_sweep(p, w.M_V, w.F_V);
    temporal_diffs(p, w.M_V, w.DV);
    spatial_diffs(V, op.grid_size, w.gxV, w.gyV);
    CMat G = cached_gradient(p, w, V, cfg.lambda_t, cfg.lambda_s, cfg.l1_smoothing_eps,
                             op.grid_size);
    if (!G.allFinite())
        throw std::runtime_error("gradient: non-finite entries");
    return G;
}

SpatialCoefficients reconstruct(std::span<const SessionDataset> datasets,
                                const EncodingOperator& op, const TemporalBasis& basis,
                                const ReconConfig& cfg, const std::optional<CMat>& init,
                                ReconDiagnostics* diag) {
    ReconConfig rc = cfg;
    Problem p = make_problem(datasets, op, basis, rc);

    CMat V;
    const bool needs_default =
        !init || rc.lambda_t < 0.0 || rc.lambda_s < 0.0 || rc.l1_smoothing_eps <= 0.0;
    CMat V0;
    if (needs_default) V0 = adjoint_init(datasets, op, basis);
    if (init) {
        if (init->rows() != p.n2 || init->cols() != basis.K)
            throw std::invalid_argument("reconstruct: init has wrong shape");
        V = *init;
    } else {
        V = V0;
    }

    if (rc.lambda_t < 0.0) rc.lambda_t = 0.02 * V0.cwiseAbs().maxCoeff();
    if (rc.lambda_s < 0.0) rc.lambda_s = rc.lambda_t / 5.0;
    if (rc.l1_smoothing_eps <= 0.0) {
        const double med = median_abs(V0);
        rc.l1_smoothing_eps = med > 0.0 ? 1e-3 * med : 1e-6;
    }
    const double lt = rc.lambda_t, ls = rc.lambda_s, eps = rc.l1_smoothing_eps;

    Workspace w;
    w.M_V.noalias() = V * p.Uc.transpose();
    forward_sweep(p, w.M_V, w.F_V);
    temporal_diffs(p, w.M_V, w.DV);
    spatial_diffs(V, op.grid_size, w.gxV, w.gyV);

    double obj = cached_objective(p, w, 0.0, false, lt, ls, eps);
    if (!std::isfinite(obj)) throw std::runtime_error("reconstruct: non-finite initial objective");

    ReconDiagnostics local;
    ReconDiagnostics& dg = diag ? *diag : local;
    dg = ReconDiagnostics{};
    dg.lambda_t = lt;
    dg.lambda_s = ls;
    dg.eps = eps;
    dg.objective_trace.push_back(obj);

    CMat G, D;
    double gg_prev = 0.0;
    bool restart_next = true;
    const int restart_every = 10 * rc.K;
    constexpr double armijo = 1e-4;

    for (int iter = 0; iter < rc.max_iters; ++iter) {
        G = cached_gradient(p, w, V, lt, ls, eps, op.grid_size);
        if (!G.allFinite())
            throw std::runtime_error("reconstruct: non-finite gradient at iteration " +
                                     std::to_string(iter));
        const double gg = G.squaredNorm();
        if (gg == 0.0) break;

        if (restart_next || iter == 0 || (iter % restart_every) == 0) {
            D = -G;
            restart_next = false;
        } else {
            const double beta = gg / gg_prev;  // Fletcher-Reeves
            D = -G + beta * D;
        }
        gg_prev = gg;

        double d0 = rdot(G, D);
        if (d0 >= 0.0) {  // not a descent direction; steepest-descent restart
            D = -G;
            d0 = -gg;
        }

        w.M_D.noalias() = D * p.Uc.transpose();
        forward_sweep(p, w.M_D, w.F_D);
        temporal_diffs(p, w.M_D, w.DD);
        spatial_diffs(D, op.grid_size, w.gxD, w.gyD);

        double alpha = rc.linesearch.initial_step;
        double trial = 0.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double a = alpha;
            for (int bt = 0; bt <= rc.linesearch.max_backtracks; ++bt) {
                trial = cached_objective(p, w, a, true, lt, ls, eps);
                if (std::isfinite(trial) && trial <= obj + armijo * a * d0) {
                    accepted = true;
                    alpha = a;
                    break;
                }
                a *= rc.linesearch.backtrack;
            }
            if (!accepted) alpha *= 0.5;  // halve the step budget once and retry
        }
        if (!accepted) {
            dg.line_search_aborted = true;
            break;
        }

        V += alpha * D;
        w.M_V += alpha * w.M_D;
        if (w.DV.cols() > 0) w.DV += alpha * w.DD;
        w.gxV += alpha * w.gxD;
        w.gyV += alpha * w.gyD;
#pragma omp parallel for schedule(static)
        for (std::int64_t f = 0; f < p.T; ++f)
            w.F_V[static_cast<std::size_t>(f)] += alpha * w.F_D[static_cast<std::size_t>(f)];

        const double prev = obj;
        obj = trial;
        dg.objective_trace.push_back(obj);
        dg.iterations = iter + 1;
        if (std::abs(prev - obj) <= rc.convergence_tol * std::max(std::abs(prev), 1e-300))
            break;
    }

    return SpatialCoefficients{std::move(V)};
}

DynamicSeries synthesize(const SpatialCoefficients& coeffs, const TemporalBasis& basis,
                         int grid_size) {
    if (coeffs.V.cols() != basis.K)
        throw std::invalid_argument("synthesize: K mismatch between coefficients and basis");
    if (coeffs.V.rows() != static_cast<Eigen::Index>(grid_size) * grid_size)
        throw std::invalid_argument("synthesize: V rows do not match grid");
    DynamicSeries s;
    s.m.noalias() = coeffs.V * basis.U_K.cast<cplx>().transpose();
    s.grid_size = grid_size;
    s.session_boundaries = basis.session_boundaries;
    return s;
}

} // namespace longrad
