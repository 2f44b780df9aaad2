#include "longrad/trajectory.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "longrad/array_io.hpp"

#include <nlohmann/json.hpp>

namespace longrad {

std::int64_t Trajectory::imaging_count() const {
    std::int64_t n = 0;
    for (const auto& e : entries)
        if (!e.is_navigator) ++n;
    return n;
}

std::int64_t Trajectory::navigator_count() const {
    return static_cast<std::int64_t>(entries.size()) - imaging_count();
}

std::array<double, 2> Trajectory::frame_angles(std::int64_t frame) const {
    const std::size_t base = static_cast<std::size_t>(frame) * 3;
    if (frame < 0 || base + 1 >= entries.size())
        throw std::out_of_range("Trajectory::frame_angles: frame out of range");
    return {entries[base].angle, entries[base + 1].angle};
}

double golden_angle(std::int64_t n) {
    if (n < 0) throw std::invalid_argument("golden_angle: negative index");
    // pi * 2 / (1 + sqrt(5)) ~ 111.246 degrees
    const double increment = std::numbers::pi_v<double> * 2.0 / (1.0 + std::sqrt(5.0));
    const double two_pi = 2.0 * std::numbers::pi_v<double>;
    return std::fmod(static_cast<double>(n) * increment, two_pi);
}

Trajectory build_navi_trajectory(std::int64_t imaging_spokes, int samples_per_spoke,
                                 std::int64_t start_global_index) {
    if (imaging_spokes <= 0 || imaging_spokes % 2 != 0)
        throw std::invalid_argument(
            "build_navi_trajectory: imaging_spokes must be positive and even "
            "(frames are formed from spoke pairs)");
    if (samples_per_spoke < 2)
        throw std::invalid_argument("build_navi_trajectory: samples_per_spoke must be >= 2");
    if (start_global_index < 0)
        throw std::invalid_argument("build_navi_trajectory: negative start index");

    Trajectory traj;
    traj.samples_per_spoke = samples_per_spoke;
    traj.entries.reserve(static_cast<std::size_t>(imaging_spokes + imaging_spokes / 2));
    for (std::int64_t i = 0; i < imaging_spokes; i += 2) {
        const std::int64_t g0 = start_global_index + i;
        traj.entries.push_back({g0, golden_angle(g0), false});
        traj.entries.push_back({g0 + 1, golden_angle(g0 + 1), false});
        traj.entries.push_back({g0, 0.0, true});
    }
    return traj;
}

std::vector<SessionSpokePlan> plan_sessions(const std::vector<std::int64_t>& counts,
                                            SpokePolicy policy) {
    if (counts.empty()) throw std::invalid_argument("plan_sessions: empty session list");
    std::vector<SessionSpokePlan> plans;
    plans.reserve(counts.size());
    std::int64_t cursor = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        const std::int64_t c = counts[s];
        if (c <= 0 || c % 2 != 0)
            throw std::invalid_argument("plan_sessions: spoke counts must be positive and even");
        SessionSpokePlan p;
        p.session_id = static_cast<int>(s);
        p.imaging_spoke_count = c;
        p.policy = policy;
        p.first_index = (policy == SpokePolicy::non_repeating) ? cursor : 0;
        plans.push_back(p);
        cursor += c;
    }
    return plans;
}

void save_trajectory(const Trajectory& traj, const SessionSpokePlan& plan,
                     const std::filesystem::path& stem) {
    const std::size_t n = traj.entries.size();
    std::vector<double> table(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        table[i * 3 + 0] = static_cast<double>(traj.entries[i].global_index);
        table[i * 3 + 1] = traj.entries[i].angle;
        table[i * 3 + 2] = traj.entries[i].is_navigator ? 1.0 : 0.0;
    }
    auto bin = stem;
    bin += ".lra";
    save_array(bin, table.data(), {static_cast<std::uint64_t>(n), 3});

    nlohmann::json j;
    j["imaging_spokes"] = traj.imaging_count();
    j["navigators"] = traj.navigator_count();
    j["samples_per_spoke"] = traj.samples_per_spoke;
    j["k_max"] = traj.k_max;
    j["policy"] = plan.policy == SpokePolicy::non_repeating ? "non_repeating" : "repeating";
    j["session_id"] = plan.session_id;
    j["index_range"] = {plan.first_index, plan.end_index()};
    j["columns"] = {"global_index", "angle_rad", "is_navigator"};
    auto side = stem;
    side += ".json";
    std::ofstream os(side);
    if (!os) throw std::runtime_error("save_trajectory: cannot open " + side.string());
    os << j.dump(2) << "\n";
}

} // namespace longrad
