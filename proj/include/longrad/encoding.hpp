#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "longrad/phantom.hpp"
#include "longrad/trajectory.hpp"
#include "longrad/types.hpp"

namespace longrad {

// Multicoil non-uniform encoding operator: direct (exact) non-uniform DFT
// along radial spokes, two imaging spokes per dynamic frame. Density
// compensation weights follow the analytic radial ramp.
struct EncodingOperator {
    CMat coil_maps;  // N^2 x C
    int grid_size = 0;
    int samples_per_spoke = 0;
    double k_max = 0.5;
    std::vector<std::array<double, 2>> frame_angles;  // per frame
    RVec weights;  // per-sample density weights W along one spoke, max 1

    int coil_count() const { return static_cast<int>(coil_maps.cols()); }
    std::int64_t frame_count() const { return static_cast<std::int64_t>(frame_angles.size()); }
};

// Acquired data for one session (or one planned slice of it). kspace holds
// per frame a (2*S) x C block, spoke-major; navigators hold S x C.
struct SessionDataset {
    std::vector<CMat> kspace;
    std::vector<CMat> navigators;
    Trajectory trajectory;
    SessionSpokePlan plan;
    std::optional<RigidTransform> applied_transform;
    double noise_sigma = 0.0;

    std::int64_t frame_count() const { return static_cast<std::int64_t>(kspace.size()); }
    int samples_per_spoke() const { return trajectory.samples_per_spoke; }
    int coil_count() const {
        return kspace.empty() ? 0 : static_cast<int>(kspace.front().cols());
    }
    void validate() const;
};

// Ramp |k| along the spoke, normalized to max 1; an exact k=0 sample gets
// half the smallest nonzero weight.
RVec density_weights(int samples_per_spoke);

EncodingOperator make_operator(const CoilMaps& coils,
                               std::vector<std::array<double, 2>> frame_angles,
                               int samples_per_spoke);

// Operator whose frame list is the chronological concatenation of the
// datasets' imaging spokes.
EncodingOperator make_operator(const CoilMaps& coils,
                               std::span<const SessionDataset> datasets);

// E applied to one frame image: (2*S) x C samples.
CMat nudft_forward(const CVec& image, const EncodingOperator& op, std::int64_t frame);

// Exact conjugate transpose of nudft_forward (coil conjugation included).
CVec nudft_adjoint(const CMat& samples, const EncodingOperator& op, std::int64_t frame);

// Simulates the planned slice of one session: renders each frame, evaluates
// the two imaging spokes plus the zero-angle navigator, and adds
// circularly-symmetric complex Gaussian noise with std noise_sigma per
// sample. Noise is keyed on (seed, session, frame time), so a sub-plan of a
// longer plan reproduces exactly the corresponding samples.
SessionDataset acquire_session(const PhantomSpec& spec, const SessionVariation& variation,
                               const SessionSpokePlan& plan, const EncodingOperator& op,
                               double noise_sigma, std::uint64_t seed);

void save_dataset(const SessionDataset& ds, const std::filesystem::path& dir);

namespace detail {

// One radial spoke of the non-uniform DFT of an (already coil-weighted)
// N x N image; out receives `samples` values at k = linspace(-k_max, k_max).
void spoke_forward(const cplx* image, int n, double angle, int samples, double k_max,
                   cplx* out);

// Accumulates the exact adjoint of spoke_forward into image_accum.
void spoke_adjoint_accum(const cplx* samples_in, int n, double angle, int samples,
                         double k_max, cplx* image_accum);

} // namespace detail

} // namespace longrad
