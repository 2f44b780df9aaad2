#pragma once

#include <span>
#include <vector>

#include "longrad/basis.hpp"
#include "longrad/encoding.hpp"
#include "longrad/solver.hpp"
#include "longrad/types.hpp"

namespace longrad {

// Sessions prepared for joint reconstruction: aligned data in chronological
// order plus the joint temporal basis estimated from all navigators.
struct ExtendedDataset {
    std::vector<SessionDataset> sessions;
    TemporalBasis joint_basis;
    std::vector<std::int64_t> frame_boundaries;
};

struct RigidOptions {
    bool enable_rotation = false;
    double peak_threshold = 0.10;  // normalized phase-correlation peak
};

// Density-compensated adjoint of all imaging spokes of one session pooled
// into a single frame.
CVec time_average(const SessionDataset& ds, const CoilMaps& coils);

// Translation via phase correlation on magnitude images with subpixel
// parabolic refinement; returns the displacement of moving relative to
// reference. Rotation (polar correlation of magnitude spectra) only when
// enabled. Falls back to identity with low_confidence set when the
// correlation peak is below threshold.
RigidTransform estimate_rigid(const CVec& reference_avg, const CVec& moving_avg, int grid_size,
                              const RigidOptions& opts = {});

// Applies the transform in k-space: per-sample linear phase
// exp(-2*pi*i*k*(dx*cos(theta) + dy*sin(theta))) on every spoke (navigators
// included) and dtheta added to every stored spoke angle.
SessionDataset apply_rigid_kspace(const SessionDataset& ds, const RigidTransform& t);

ExtendedDataset concatenate(std::span<const SessionDataset> datasets, int K);

// Contiguous per-session slices of a jointly reconstructed series.
std::vector<DynamicSeries> split_series(const DynamicSeries& series);

} // namespace longrad
