#pragma once

#include <optional>
#include <span>
#include <vector>

#include "longrad/basis.hpp"
#include "longrad/encoding.hpp"
#include "longrad/types.hpp"

namespace longrad {

struct LineSearchConfig {
    double initial_step = 1.0;
    double backtrack = 0.5;
    int max_backtracks = 20;
};

// Settings for the subspace reconstruction
//   argmin_V 0.5*||sqrt(W).(E(V U') - y)||^2
//            + lambda_t * sum phi(S_t(V U')) + lambda_s * sum phi(S_s V)
// with phi(z) = sqrt(|z|^2 + eps^2). Negative lambda/eps values resolve
// against the density-compensated adjoint init: lambda_t = 0.02*max|V0|,
// lambda_s = lambda_t/5, eps = 1e-3*median|V0|.
struct ReconConfig {
    double lambda_t = -1.0;
    double lambda_s = -1.0;
    int K = 6;
    int max_iters = 60;
    double l1_smoothing_eps = -1.0;
    LineSearchConfig linesearch;
    double convergence_tol = 1e-6;
    // Zero the temporal difference across session boundaries (ablation);
    // off by default, inter-session change is resolved as dynamics.
    bool mask_session_boundaries = false;
};

struct SpatialCoefficients {
    CMat V;  // N^2 x K
};

struct DynamicSeries {
    CMat m;  // N^2 x T
    int grid_size = 0;
    std::vector<std::int64_t> session_boundaries;
};

struct ReconDiagnostics {
    std::vector<double> objective_trace;  // initial value plus one per accepted step
    double lambda_t = 0.0, lambda_s = 0.0, eps = 0.0;
    int iterations = 0;
    bool line_search_aborted = false;
};

// Objective value; cfg.lambda_t/lambda_s/l1_smoothing_eps must be concrete.
double objective(const CMat& V, std::span<const SessionDataset> datasets,
                 const EncodingOperator& op, const TemporalBasis& basis,
                 const ReconConfig& cfg);

// Wirtinger gradient with respect to V (direction of steepest ascent for
// real perturbations): E'(W.(E(V U') - y)) U_K + lambda_t S_t'(psi(S_t(V U'))) U_K
// + lambda_s S_s'(psi(S_s V)), psi(z) = z / phi(z).
CMat gradient(const CMat& V, std::span<const SessionDataset> datasets,
              const EncodingOperator& op, const TemporalBasis& basis,
              const ReconConfig& cfg);

// Fletcher-Reeves nonlinear conjugate gradient with backtracking line
// search, restarted every 10*K iterations. Default init is the
// density-compensated adjoint projected onto the subspace.
SpatialCoefficients reconstruct(std::span<const SessionDataset> datasets,
                                const EncodingOperator& op, const TemporalBasis& basis,
                                const ReconConfig& cfg,
                                const std::optional<CMat>& init = std::nullopt,
                                ReconDiagnostics* diag = nullptr);

// m = V_K U_K'; carries the basis session boundaries.
DynamicSeries synthesize(const SpatialCoefficients& coeffs, const TemporalBasis& basis,
                         int grid_size);

// Density-compensated adjoint of the data projected onto the subspace (the
// default solver init), scaled to approximate image magnitudes.
CMat adjoint_init(std::span<const SessionDataset> datasets, const EncodingOperator& op,
                  const TemporalBasis& basis);

} // namespace longrad
