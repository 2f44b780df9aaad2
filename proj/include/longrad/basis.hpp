#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "longrad/encoding.hpp"
#include "longrad/types.hpp"

namespace longrad {

// Magnitude projection profiles of the zero-angle navigators, one column
// per frame, sessions concatenated in order.
struct NavigatorProjections {
    RMat P;  // samples x T
    std::vector<std::int64_t> session_boundaries;  // frame offset of each session start
};

// Temporal subspace from uncentered PCA (SVD without mean subtraction) of
// the navigator series. Columns are orthonormal; the first corresponds to
// the largest singular value (the DC-like component); each column's
// largest-magnitude entry is made positive.
struct TemporalBasis {
    RMat U;    // T x T_kept right singular vectors
    RMat U_K;  // T x K
    int K = 0;
    RVec singular_values;
    std::vector<std::int64_t> session_boundaries;

    std::int64_t frame_count() const { return U_K.rows(); }
};

// Per frame: inverse-transform the navigator spoke onto a pixel-spaced
// profile and combine coils by root-sum-of-squares magnitude.
NavigatorProjections navigator_projections(std::span<const SessionDataset> datasets);

TemporalBasis estimate_basis(const NavigatorProjections& proj, int K);

// <stem>_uk.lra, <stem>_sv.lra and a <stem>.json sidecar with boundaries.
void save_basis(const TemporalBasis& basis, const std::filesystem::path& stem);

} // namespace longrad
