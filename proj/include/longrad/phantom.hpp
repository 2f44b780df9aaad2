#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "longrad/types.hpp"

namespace longrad {

// Analytic ellipse in pixel coordinates centered at the grid midpoint
// (pixel (i,j) sits at x = j - N/2, y = i - N/2). Non-fat ellipses paint
// over whatever was drawn before them; fat-tagged ellipses add their
// intensity scaled by the session's fat_intensity_factor after the base
// pass, so a zero factor removes them entirely.
struct Ellipse {
    double cx = 0.0, cy = 0.0;
    double ax = 1.0, ay = 1.0;  // semi-axes, pixels
    double rotation = 0.0;      // radians
    double intensity = 0.0;     // [0, 1]
    double motion_gain = 0.0;   // respiratory displacement multiplier (along y)
    bool fat = false;
};

struct Respiration {
    double amplitude = 3.0;  // pixels
    double period = 50.0;    // frames
    double drift = 0.0;      // pixels/frame
};

// Additive focal lesion riding the respiratory motion with unit gain.
struct Lesion {
    double cx = 0.0, cy = 0.0;
    double radius = 2.0;
    double intensity_delta = 0.0;
};

struct PhantomSpec {
    int grid_size = 64;
    std::vector<Ellipse> ellipses;  // first entry is the outer body contour
    Respiration respiration;
    std::optional<Lesion> lesion;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-session changes: bulk translation, body-contour scaling (applied to
// the first ellipse), fat signal scaling, and a respiratory phase shift.
struct SessionVariation {
    double dx = 0.0, dy = 0.0;           // pixels
    double contour_scale = 1.0;          // in [0.8, 1.2]
    double fat_intensity_factor = 1.0;   // >= 0
    double respiration_phase_offset = 0.0;  // frames

    void validate() const;
};

struct CoilMaps {
    CMat maps;  // N^2 x C
    int grid_size = 0;
    int coil_count() const { return static_cast<int>(maps.cols()); }
};

// Respiratory displacement s(t) in pixels.
double respiration_displacement(const Respiration& r, const SessionVariation& var, double t);

// Rasterizes the phantom at (possibly fractional) acquisition time t.
// Point-in-ellipse tests at pixel centers, no anti-aliasing. Throws if any
// displaced ellipse leaves the field of view.
RVec render_frame(const PhantomSpec& spec, const SessionVariation& var, double t);

// Mask of the lesion disc at time t (1 inside, 0 outside); all-zero when the
// spec has no lesion.
RVec lesion_mask(const PhantomSpec& spec, const SessionVariation& var, double t);

// Mask of the union of fat-tagged ellipses at time t.
RVec fat_mask(const PhantomSpec& spec, const SessionVariation& var, double t);

// Smooth complex coil profiles (low-order polynomial times Gaussian,
// centered at equally spaced boundary positions), normalized to unit
// root-sum-of-squares magnitude.
CoilMaps simulate_coil_maps(int coils, int grid_size, std::uint64_t seed);

// Deterministic default abdominal-like phantom used by the bundled
// experiment configs.
PhantomSpec standard_phantom(int grid_size = 64);

} // namespace longrad
