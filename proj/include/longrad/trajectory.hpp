#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace longrad {

// One acquisition entry. Imaging spokes carry their golden-angle counter in
// global_index; a navigator entry carries the global index of the first
// imaging spoke of its frame (navigators do not consume golden-angle
// indices and are always acquired at angle zero).
struct TrajectoryEntry {
    std::int64_t global_index = 0;
    double angle = 0.0;  // radians, not reduced modulo pi
    bool is_navigator = false;
};

// Interleaved schedule: two imaging spokes followed by one navigator,
// repeated. A spoke is a full diameter through the k-space center with
// samples_per_spoke points evenly spaced in [-k_max, k_max].
struct Trajectory {
    std::vector<TrajectoryEntry> entries;
    int samples_per_spoke = 0;
    double k_max = 0.5;  // cycles/pixel

    std::int64_t imaging_count() const;
    std::int64_t navigator_count() const;
    // Angles of the two imaging spokes of a frame.
    std::array<double, 2> frame_angles(std::int64_t frame) const;
};

enum class SpokePolicy { non_repeating, repeating };

// Which slice of a session's full-length golden-angle schedule enters a
// reconstruction. non_repeating plans tile consecutive disjoint index
// ranges; repeating plans all start at index 0.
struct SessionSpokePlan {
    int session_id = 0;
    std::int64_t imaging_spoke_count = 0;
    std::int64_t first_index = 0;  // half-open [first_index, first_index + imaging_spoke_count)
    SpokePolicy policy = SpokePolicy::non_repeating;

    std::int64_t end_index() const { return first_index + imaging_spoke_count; }
    std::int64_t frame_count() const { return imaging_spoke_count / 2; }
    // Phantom time of the plan's first frame (frames are two spokes long).
    std::int64_t first_frame_time() const { return first_index / 2; }
};

// n-th golden-angle increment, reduced modulo 2*pi.
double golden_angle(std::int64_t n);

Trajectory build_navi_trajectory(std::int64_t imaging_spokes, int samples_per_spoke,
                                 std::int64_t start_global_index);

std::vector<SessionSpokePlan> plan_sessions(const std::vector<std::int64_t>& counts,
                                            SpokePolicy policy);

// Binary angle/index/flag arrays plus a structured-text sidecar
// (<stem>.lra + <stem>.json).
void save_trajectory(const Trajectory& traj, const SessionSpokePlan& plan,
                     const std::filesystem::path& stem);

} // namespace longrad
