#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longrad/basis.hpp"
#include "longrad/encoding.hpp"
#include "longrad/longitudinal.hpp"
#include "longrad/metrics.hpp"
#include "longrad/phantom.hpp"
#include "longrad/solver.hpp"
#include "longrad/trajectory.hpp"
#include "longrad/types.hpp"

namespace longrad {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RunMode { reference, single_session, longitudinal, pseudo_longitudinal };

std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct OutputOptions {
    std::filesystem::path dir = "out";
    int frame_stride = 0;  // 0 disables PNG frame dumps
    int xt_row = -1;       // -1 picks the grid midline
    bool save_series = false;
};

struct ExperimentConfig {
    std::string name = "experiment";
    int coils = 8;
    int samples_per_spoke = 65;
    std::uint64_t coil_seed = 101;
    double noise_sigma = 0.0;
    PhantomSpec phantom;
    std::vector<PhantomSpec> alt_phantoms;  // pseudo-longitudinal sessions 2..n
    std::vector<std::int64_t> session_spokes;
    std::int64_t reference_spokes = 1000;
    SpokePolicy policy = SpokePolicy::non_repeating;
    std::vector<SessionVariation> variations;
    bool registration = false;
    bool rotation_registration = false;
    ReconConfig recon;
    std::vector<std::uint64_t> seeds;
    std::vector<RunMode> modes;
    OutputOptions output;

    void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// ---- pipeline building blocks ------------------------------------------

// Full-length acquisition plan of one session ([0, reference_spokes)).
SessionSpokePlan full_session_plan(int session_id, std::int64_t reference_spokes);

// Frame slice of a longer acquisition matching the given sub-plan;
// bit-identical to acquiring the sub-plan directly.
SessionDataset slice_plan(const SessionDataset& full, const SessionSpokePlan& plan);

struct SoloRecon {
    SpatialCoefficients coeffs;
    TemporalBasis basis;
    DynamicSeries series;
    ReconDiagnostics diag;
};

// Single-dataset reconstruction with a basis estimated from its own
// navigators.
SoloRecon reconstruct_solo(const SessionDataset& ds, const CoilMaps& coils,
                           const ReconConfig& cfg);

struct JointRecon {
    SpatialCoefficients coeffs;
    ExtendedDataset ext;
    DynamicSeries joint;
    std::vector<DynamicSeries> per_session;
    ReconDiagnostics diag;
};

// Concatenated multi-session reconstruction with a joint basis.
JointRecon reconstruct_joint(std::span<const SessionDataset> datasets, const CoilMaps& coils,
                             const ReconConfig& cfg);

struct AlignmentResult {
    std::vector<SessionDataset> aligned;
    std::vector<RigidTransform> transforms;  // estimated displacement per session
};

// Estimates per-session displacement against the first session from
// time-averaged images and applies the inverse in k-space.
AlignmentResult align_to_first(std::span<const SessionDataset> datasets, const CoilMaps& coils,
                               const RigidOptions& opts = {});

// ---- artifacts -----------------------------------------------------------

RMat frame_magnitude(const DynamicSeries& series, std::int64_t frame);

// 8-bit grayscale PNGs of magnitude frames, windowed to [0, p99.5] of the
// reference magnitude (the series itself when window_ref is null), plus one
// x-t profile image along the configured row.
void emit_frames(const DynamicSeries& series, const std::filesystem::path& dir, int stride,
                 const DynamicSeries* window_ref = nullptr, int xt_row = -1);

void write_objective_csv(const std::filesystem::path& path, const ReconDiagnostics& diag);

// Runs the configured modes over all seeds and writes the artifact tree.
// Returns the metrics report (also written to CSV/summary files).
MetricsReport run_experiment(const ExperimentConfig& config);

} // namespace longrad
