#include "longrad/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "longrad/array_io.hpp"
#include "longrad/png_io.hpp"

namespace longrad {

using nlohmann::json;

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::reference: return "reference";
        case RunMode::single_session: return "single_session";
        case RunMode::longitudinal: return "longitudinal";
        case RunMode::pseudo_longitudinal: return "pseudo_longitudinal";
    }
    return "?";
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "reference") return RunMode::reference;
    if (s == "single_session") return RunMode::single_session;
    if (s == "longitudinal") return RunMode::longitudinal;
    if (s == "pseudo_longitudinal") return RunMode::pseudo_longitudinal;
    throw ConfigError("unknown mode: " + s);
}

namespace {

PhantomSpec parse_phantom(const json& j, int default_grid) {
    PhantomSpec spec;
    if (j.value("standard", false)) {
        spec = standard_phantom(j.value("grid_size", default_grid));
    } else {
        spec.grid_size = j.value("grid_size", default_grid);
        if (!j.contains("ellipses")) throw ConfigError("phantom: missing ellipses");
        for (const auto& je : j.at("ellipses")) {
            Ellipse e;
            e.cx = je.at("center").at(0).get<double>();
            e.cy = je.at("center").at(1).get<double>();
            e.ax = je.at("semi").at(0).get<double>();
            e.ay = je.at("semi").at(1).get<double>();
            e.rotation = je.value("rotation", 0.0);
            e.intensity = je.at("intensity").get<double>();
            e.motion_gain = je.value("motion_gain", 0.0);
            e.fat = je.value("fat", false);
            spec.ellipses.push_back(e);
        }
    }
    if (j.contains("respiration")) {
        const auto& jr = j.at("respiration");
        spec.respiration.amplitude = jr.value("amplitude", spec.respiration.amplitude);
        spec.respiration.period = jr.value("period", spec.respiration.period);
        spec.respiration.drift = jr.value("drift", spec.respiration.drift);
    }
    if (j.contains("lesion") && !j.at("lesion").is_null()) {
        const auto& jl = j.at("lesion");
        Lesion l;
        l.cx = jl.at("center").at(0).get<double>();
        l.cy = jl.at("center").at(1).get<double>();
        l.radius = jl.at("radius").get<double>();
        l.intensity_delta = jl.at("delta").get<double>();
        spec.lesion = l;
    }
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

SessionVariation parse_variation(const json& j) {
    SessionVariation v;
    if (j.contains("translation")) {
        v.dx = j.at("translation").at(0).get<double>();
        v.dy = j.at("translation").at(1).get<double>();
    }
    v.contour_scale = j.value("contour_scale", 1.0);
    v.fat_intensity_factor = j.value("fat_intensity_factor", 1.0);
    v.respiration_phase_offset = j.value("respiration_phase_offset", 0.0);
    return v;
}

} // namespace

void ExperimentConfig::validate() const {
    if (session_spokes.empty()) throw ConfigError("config: session_spokes is empty");
    for (auto c : session_spokes)
        if (c <= 0 || c % 2 != 0) throw ConfigError("config: spoke counts must be positive and even");
    if (reference_spokes <= 0 || reference_spokes % 2 != 0)
        throw ConfigError("config: reference_spokes must be positive and even");
    for (auto c : session_spokes)
        if (c > reference_spokes)
            throw ConfigError("config: session spokes exceed the full-length acquisition");
    if (seeds.empty()) throw ConfigError("config: need at least one seed");
    if (variations.size() != session_spokes.size())
        throw ConfigError("config: one variation per session required");
    if (modes.empty()) throw ConfigError("config: no modes selected");
    const bool pseudo = std::find(modes.begin(), modes.end(), RunMode::pseudo_longitudinal) !=
                        modes.end();
    if (pseudo && alt_phantoms.empty())
        throw ConfigError("config: pseudo_longitudinal requires at least two distinct phantoms");
    if (coils < 1) throw ConfigError("config: coils must be >= 1");
    if (samples_per_spoke < 2) throw ConfigError("config: samples_per_spoke must be >= 2");
    phantom.validate();
    for (const auto& p : alt_phantoms) {
        p.validate();
        if (p.grid_size != phantom.grid_size)
            throw ConfigError("config: all phantoms must share the grid size");
    }
    for (const auto& v : variations) v.validate();
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        cfg.name = j.value("name", cfg.name);
        cfg.coils = j.value("coils", cfg.coils);
        cfg.samples_per_spoke = j.value("samples_per_spoke", cfg.samples_per_spoke);
        cfg.coil_seed = j.value("coil_seed", cfg.coil_seed);
        cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
        const int grid = j.value("grid_size", 64);
        cfg.phantom = j.contains("phantom") ? parse_phantom(j.at("phantom"), grid)
                                            : standard_phantom(grid);
        if (j.contains("alt_phantoms"))
            for (const auto& jp : j.at("alt_phantoms"))
                cfg.alt_phantoms.push_back(parse_phantom(jp, grid));
        cfg.session_spokes = j.at("session_spokes").get<std::vector<std::int64_t>>();
        cfg.reference_spokes = j.value("reference_spokes", cfg.reference_spokes);
        const std::string pol = j.value("policy", "non_repeating");
        if (pol == "non_repeating")
            cfg.policy = SpokePolicy::non_repeating;
        else if (pol == "repeating")
            cfg.policy = SpokePolicy::repeating;
        else
            throw ConfigError("config: unknown policy " + pol);
        if (j.contains("variations"))
            for (const auto& jv : j.at("variations")) cfg.variations.push_back(parse_variation(jv));
        else
            cfg.variations.resize(cfg.session_spokes.size());
        cfg.registration = j.value("registration", false);
        cfg.rotation_registration = j.value("rotation_registration", false);
        if (j.contains("recon")) {
            const auto& jr = j.at("recon");
            cfg.recon.K = jr.value("K", cfg.recon.K);
            cfg.recon.lambda_t = jr.value("lambda_t", cfg.recon.lambda_t);
            cfg.recon.lambda_s = jr.value("lambda_s", cfg.recon.lambda_s);
            cfg.recon.max_iters = jr.value("max_iters", cfg.recon.max_iters);
            cfg.recon.l1_smoothing_eps = jr.value("eps", cfg.recon.l1_smoothing_eps);
            cfg.recon.convergence_tol = jr.value("tol", cfg.recon.convergence_tol);
            cfg.recon.linesearch.initial_step =
                jr.value("initial_step", cfg.recon.linesearch.initial_step);
            cfg.recon.linesearch.backtrack = jr.value("backtrack", cfg.recon.linesearch.backtrack);
            cfg.recon.linesearch.max_backtracks =
                jr.value("max_backtracks", cfg.recon.linesearch.max_backtracks);
            cfg.recon.mask_session_boundaries =
                jr.value("mask_session_boundaries", cfg.recon.mask_session_boundaries);
        }
        cfg.seeds = j.value("seeds", std::vector<std::uint64_t>{1});
        if (j.contains("modes"))
            for (const auto& jm : j.at("modes"))
                cfg.modes.push_back(run_mode_from_string(jm.get<std::string>()));
        else
            cfg.modes = {RunMode::reference, RunMode::single_session, RunMode::longitudinal};
        if (j.contains("output")) {
            const auto& jo = j.at("output");
            cfg.output.dir = jo.value("dir", cfg.output.dir.string());
            cfg.output.frame_stride = jo.value("frame_stride", cfg.output.frame_stride);
            cfg.output.xt_row = jo.value("xt_row", cfg.output.xt_row);
            cfg.output.save_series = jo.value("save_series", cfg.output.save_series);
        }
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

// ---- pipeline building blocks ------------------------------------------

SessionSpokePlan full_session_plan(int session_id, std::int64_t reference_spokes) {
    SessionSpokePlan p;
    p.session_id = session_id;
    p.imaging_spoke_count = reference_spokes;
    p.first_index = 0;
    p.policy = SpokePolicy::non_repeating;
    return p;
}

SessionDataset slice_plan(const SessionDataset& full, const SessionSpokePlan& plan) {
    if (plan.first_index < full.plan.first_index || plan.end_index() > full.plan.end_index())
        throw std::invalid_argument("slice_plan: plan exceeds the acquired index range");
    if (plan.session_id != full.plan.session_id)
        throw std::invalid_argument("slice_plan: session mismatch");

    const std::int64_t f0 = plan.first_frame_time() - full.plan.first_frame_time();
    const std::int64_t frames = plan.frame_count();

    SessionDataset out;
    out.plan = plan;
    out.noise_sigma = full.noise_sigma;
    out.applied_transform = full.applied_transform;
    out.trajectory.samples_per_spoke = full.trajectory.samples_per_spoke;
    out.trajectory.k_max = full.trajectory.k_max;
    out.trajectory.entries.assign(full.trajectory.entries.begin() + 3 * f0,
                                  full.trajectory.entries.begin() + 3 * (f0 + frames));
    out.kspace.assign(full.kspace.begin() + f0, full.kspace.begin() + f0 + frames);
    out.navigators.assign(full.navigators.begin() + f0, full.navigators.begin() + f0 + frames);
    return out;
}

SoloRecon reconstruct_solo(const SessionDataset& ds, const CoilMaps& coils,
                           const ReconConfig& cfg) {
    SoloRecon r;
    const std::span<const SessionDataset> one(&ds, 1);
    r.basis = estimate_basis(navigator_projections(one), cfg.K);
    const EncodingOperator op = make_operator(coils, one);
    r.coeffs = reconstruct(one, op, r.basis, cfg, std::nullopt, &r.diag);
    r.series = synthesize(r.coeffs, r.basis, coils.grid_size);
    return r;
}

JointRecon reconstruct_joint(std::span<const SessionDataset> datasets, const CoilMaps& coils,
                             const ReconConfig& cfg) {
    JointRecon r;
    r.ext = concatenate(datasets, cfg.K);
    const EncodingOperator op = make_operator(coils, r.ext.sessions);
    r.coeffs = reconstruct(r.ext.sessions, op, r.ext.joint_basis, cfg, std::nullopt, &r.diag);
    r.joint = synthesize(r.coeffs, r.ext.joint_basis, coils.grid_size);
    r.per_session = split_series(r.joint);
    return r;
}

AlignmentResult align_to_first(std::span<const SessionDataset> datasets, const CoilMaps& coils,
                               const RigidOptions& opts) {
    if (datasets.empty()) throw std::invalid_argument("align_to_first: no sessions");
    AlignmentResult res;
    const CVec ref_avg = time_average(datasets[0], coils);
    for (std::size_t s = 0; s < datasets.size(); ++s) {
        RigidTransform t;
        if (s == 0) {
            t.peak_score = 1.0;
        } else {
            const CVec mov_avg = time_average(datasets[s], coils);
            t = estimate_rigid(ref_avg, mov_avg, coils.grid_size, opts);
        }
        res.aligned.push_back(apply_rigid_kspace(datasets[s], t.inverse()));
        res.transforms.push_back(t);
    }
    return res;
}

// ---- artifacts -----------------------------------------------------------

RMat frame_magnitude(const DynamicSeries& series, std::int64_t frame) {
    const int n = series.grid_size;
    if (frame < 0 || frame >= series.m.cols())
        throw std::out_of_range("frame_magnitude: frame out of range");
    RMat img(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            img(i, j) = std::abs(series.m(static_cast<Eigen::Index>(i) * n + j, frame));
    return img;
}

namespace {

double percentile_995(const DynamicSeries& s) {
    std::vector<double> mags(static_cast<std::size_t>(s.m.size()));
    for (Eigen::Index i = 0; i < s.m.size(); ++i)
        mags[static_cast<std::size_t>(i)] = std::abs(s.m.data()[i]);
    const std::size_t idx =
        std::min(mags.size() - 1, static_cast<std::size_t>(0.995 * (mags.size() - 1)));
    std::nth_element(mags.begin(), mags.begin() + idx, mags.end());
    return mags[idx];
}

std::uint8_t to_gray(double v, double window) {
    if (window <= 0.0) return 0;
    const double t = std::clamp(v / window, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(255.0 * t));
}

} // namespace

void emit_frames(const DynamicSeries& series, const std::filesystem::path& dir, int stride,
                 const DynamicSeries* window_ref, int xt_row) {
    if (stride < 1) throw std::invalid_argument("emit_frames: stride must be >= 1");
    std::filesystem::create_directories(dir);
    const int n = series.grid_size;
    const std::int64_t t = series.m.cols();
    const double window = percentile_995(window_ref ? *window_ref : series);

    std::vector<std::uint8_t> pix(static_cast<std::size_t>(n) * n);
    for (std::int64_t f = 0; f < t; f += stride) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                pix[static_cast<std::size_t>(i) * n + j] =
                    to_gray(std::abs(series.m(static_cast<Eigen::Index>(i) * n + j, f)), window);
        std::ostringstream name;
        name << "frame_" << std::setw(5) << std::setfill('0') << f << ".png";
        write_gray_png(dir / name.str(), pix.data(), n, n);
    }

    const int row = xt_row < 0 ? n / 2 : xt_row;
    if (row >= 0 && row < n) {
        std::vector<std::uint8_t> xt(static_cast<std::size_t>(n) * t);
        for (std::int64_t f = 0; f < t; ++f)
            for (int j = 0; j < n; ++j)
                xt[static_cast<std::size_t>(j) * t + f] =
                    to_gray(std::abs(series.m(static_cast<Eigen::Index>(row) * n + j, f)), window);
        write_gray_png(dir / "xt_profile.png", xt.data(), static_cast<int>(t), n);
    }
}

void write_objective_csv(const std::filesystem::path& path, const ReconDiagnostics& diag) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_objective_csv: cannot open " + path.string());
    os << std::setprecision(17);
    os << "# lambda_t=" << diag.lambda_t << " lambda_s=" << diag.lambda_s << " eps=" << diag.eps
       << " iterations=" << diag.iterations
       << " line_search_aborted=" << (diag.line_search_aborted ? 1 : 0) << "\n";
    os << "iter,objective\n";
    for (std::size_t i = 0; i < diag.objective_trace.size(); ++i)
        os << i << ',' << diag.objective_trace[i] << '\n';
}

// ---- experiment driver ----------------------------------------------------

namespace {

struct SeedContext {
    std::uint64_t seed = 0;
    CoilMaps coils;
    // Full-length acquisitions: [phantom][session]
    std::vector<std::vector<SessionDataset>> full;
    std::vector<SessionDataset> subsets;         // primary phantom, per session
    std::vector<SessionDataset> pseudo_subsets;  // session s from phantom min(s, #alt)
    std::vector<SoloRecon> references;           // primary phantom, per session
};

void add_series_metrics(MetricsReport& report, int seed, const std::string& mode, int session1,
                        const DynamicSeries& test, const DynamicSeries& ref,
                        std::int64_t ref_frame_offset) {
    const std::int64_t t = test.m.cols();
    std::vector<MetricRow> rows(static_cast<std::size_t>(t));
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < t; ++f) {
        const RMat a = frame_magnitude(test, f);
        const RMat b = frame_magnitude(ref, ref_frame_offset + f);
        MetricRow row;
        row.seed = seed;
        row.mode = mode;
        row.session = session1;
        row.frame = f;
        row.ssim = ssim(a, b);
        row.nrmse = nrmse(a, b);
        rows[static_cast<std::size_t>(f)] = row;
    }
    report.per_frame.insert(report.per_frame.end(), rows.begin(), rows.end());
}

std::vector<double> collect(const MetricsReport& r, const std::string& mode, int session,
                            bool use_ssim, std::optional<int> seed = std::nullopt) {
    std::vector<double> out;
    for (const auto& row : r.per_frame) {
        if (row.mode != mode) continue;
        if (session != 0 && row.session != session) continue;
        if (seed && row.seed != *seed) continue;
        out.push_back(use_ssim ? row.ssim : row.nrmse);
    }
    return out;
}

} // namespace

MetricsReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto& out_dir = config.output.dir;
    std::filesystem::create_directories(out_dir);

    MetricsReport report;
    const auto plans = plan_sessions(config.session_spokes, config.policy);
    const std::size_t n_sessions = plans.size();
    const bool want_ref = std::find(config.modes.begin(), config.modes.end(),
                                    RunMode::reference) != config.modes.end();
    const bool want_single = std::find(config.modes.begin(), config.modes.end(),
                                       RunMode::single_session) != config.modes.end();
    const bool want_long = std::find(config.modes.begin(), config.modes.end(),
                                     RunMode::longitudinal) != config.modes.end();
    const bool want_pseudo = std::find(config.modes.begin(), config.modes.end(),
                                       RunMode::pseudo_longitudinal) != config.modes.end();

    for (const auto seed : config.seeds) {
        SeedContext ctx;
        ctx.seed = seed;
        ctx.coils = simulate_coil_maps(config.coils, config.phantom.grid_size, config.coil_seed);
        const EncodingOperator acq_op =
            make_operator(ctx.coils, {}, config.samples_per_spoke);

        // Phantom 0 is the primary; alternates only used by pseudo mode.
        std::vector<const PhantomSpec*> phantoms{&config.phantom};
        for (const auto& p : config.alt_phantoms) phantoms.push_back(&p);

        ctx.full.resize(phantoms.size());
        for (std::size_t p = 0; p < phantoms.size(); ++p) {
            if (p > 0 && !want_pseudo) break;
            ctx.full[p].resize(n_sessions);
            for (std::size_t s = 0; s < n_sessions; ++s) {
                const bool needed = p == 0 || (want_pseudo && s > 0 && p == std::min(s, phantoms.size() - 1));
                if (!needed) continue;
                ctx.full[p][s] = acquire_session(*phantoms[p], config.variations[s],
                                                 full_session_plan(static_cast<int>(s),
                                                                   config.reference_spokes),
                                                 acq_op, config.noise_sigma, seed);
            }
        }
        for (std::size_t s = 0; s < n_sessions; ++s)
            ctx.subsets.push_back(slice_plan(ctx.full[0][s], plans[s]));
        if (want_pseudo)
            for (std::size_t s = 0; s < n_sessions; ++s) {
                const std::size_t p = s == 0 ? 0 : std::min(s, phantoms.size() - 1);
                ctx.pseudo_subsets.push_back(slice_plan(ctx.full[p][s], plans[s]));
            }

        const auto seed_dir = out_dir / ("seed_" + std::to_string(seed));
        std::filesystem::create_directories(seed_dir);

        // Reference reconstructions (needed as ground truth for the others).
        for (std::size_t s = 0; s < n_sessions; ++s)
            ctx.references.push_back(reconstruct_solo(ctx.full[0][s], ctx.coils, config.recon));
        if (want_ref)
            for (std::size_t s = 0; s < n_sessions; ++s) {
                const auto dir = seed_dir / "reference" / ("session_" + std::to_string(s + 1));
                std::filesystem::create_directories(dir);
                write_objective_csv(dir / "objective.csv", ctx.references[s].diag);
                save_matrix(dir / "coefficients.lra", ctx.references[s].coeffs.V);
                save_basis(ctx.references[s].basis, dir / "basis");
                if (config.output.save_series)
                    save_matrix(dir / "series.lra", ctx.references[s].series.m);
                if (config.output.frame_stride > 0)
                    emit_frames(ctx.references[s].series, dir / "frames",
                                config.output.frame_stride, nullptr, config.output.xt_row);
            }

        if (want_single) {
            for (std::size_t s = 0; s < n_sessions; ++s) {
                const SoloRecon rec = reconstruct_solo(ctx.subsets[s], ctx.coils, config.recon);
                add_series_metrics(report, static_cast<int>(seed), "single_session",
                                   static_cast<int>(s + 1), rec.series, ctx.references[s].series,
                                   plans[s].first_frame_time());
                const auto dir = seed_dir / "single_session" / ("session_" + std::to_string(s + 1));
                std::filesystem::create_directories(dir);
                write_objective_csv(dir / "objective.csv", rec.diag);
                save_matrix(dir / "coefficients.lra", rec.coeffs.V);
                if (config.output.save_series) save_matrix(dir / "series.lra", rec.series.m);
                if (config.output.frame_stride > 0)
                    emit_frames(rec.series, dir / "frames", config.output.frame_stride,
                                &ctx.references[s].series, config.output.xt_row);
            }
        }

        if (want_long) {
            std::vector<SessionDataset> inputs = ctx.subsets;
            std::vector<SoloRecon> refs;  // per-session references matching the alignment
            std::vector<RigidTransform> transforms;
            if (config.registration) {
                RigidOptions ropts;
                ropts.enable_rotation = config.rotation_registration;
                AlignmentResult ar = align_to_first(ctx.subsets, ctx.coils, ropts);
                inputs = std::move(ar.aligned);
                transforms = std::move(ar.transforms);
                for (std::size_t s = 0; s < n_sessions; ++s) {
                    const auto& t = transforms[s];
                    if (t.dx == 0.0 && t.dy == 0.0 && t.dtheta == 0.0) {
                        refs.push_back(ctx.references[s]);
                        continue;
                    }
                    // The same correction is applied to the session's full
                    // data, so each aligned output is judged against a
                    // reference in the same (aligned) position.
                    const SessionDataset aligned_full =
                        apply_rigid_kspace(ctx.full[0][s], t.inverse());
                    refs.push_back(reconstruct_solo(aligned_full, ctx.coils, config.recon));
                }
            }
            const JointRecon rec = reconstruct_joint(inputs, ctx.coils, config.recon);
            const auto dir = seed_dir / "longitudinal";
            std::filesystem::create_directories(dir);
            write_objective_csv(dir / "objective.csv", rec.diag);
            save_matrix(dir / "coefficients.lra", rec.coeffs.V);
            save_basis(rec.ext.joint_basis, dir / "joint_basis");
            if (!transforms.empty()) {
                json jt = json::array();
                for (std::size_t s = 0; s < transforms.size(); ++s)
                    jt.push_back({{"session", s + 1},
                                  {"dx", transforms[s].dx},
                                  {"dy", transforms[s].dy},
                                  {"dtheta", transforms[s].dtheta},
                                  {"peak_score", transforms[s].peak_score},
                                  {"low_confidence", transforms[s].low_confidence}});
                std::ofstream os(dir / "transforms.json");
                os << jt.dump(2) << "\n";
            }
            for (std::size_t s = 0; s < n_sessions; ++s) {
                const DynamicSeries& ref_series =
                    config.registration ? refs[s].series : ctx.references[s].series;
                add_series_metrics(report, static_cast<int>(seed), "longitudinal",
                                   static_cast<int>(s + 1), rec.per_session[s], ref_series,
                                   plans[s].first_frame_time());
                if (config.output.frame_stride > 0)
                    emit_frames(rec.per_session[s], dir / ("session_" + std::to_string(s + 1)),
                                config.output.frame_stride, &ref_series, config.output.xt_row);
                if (config.output.save_series)
                    save_matrix(dir / ("series_session_" + std::to_string(s + 1) + ".lra"),
                                rec.per_session[s].m);
            }
        }

        if (want_pseudo) {
            const JointRecon rec = reconstruct_joint(ctx.pseudo_subsets, ctx.coils, config.recon);
            const auto dir = seed_dir / "pseudo_longitudinal";
            std::filesystem::create_directories(dir);
            write_objective_csv(dir / "objective.csv", rec.diag);
            save_matrix(dir / "coefficients.lra", rec.coeffs.V);
            for (std::size_t s = 0; s < n_sessions; ++s) {
                // Each pseudo session is evaluated against the reference of
                // the phantom it was actually drawn from.
                const std::size_t p = s == 0 ? 0 : std::min(s, ctx.full.size() - 1);
                const SoloRecon ref = p == 0
                                          ? SoloRecon{}
                                          : reconstruct_solo(ctx.full[p][s], ctx.coils, config.recon);
                const DynamicSeries& ref_series =
                    p == 0 ? ctx.references[s].series : ref.series;
                add_series_metrics(report, static_cast<int>(seed), "pseudo_longitudinal",
                                   static_cast<int>(s + 1), rec.per_session[s], ref_series,
                                   plans[s].first_frame_time());
            }
        }
    }

    // Comparison tests over pooled frames and per-seed means.
    auto add_test = [&](const std::string& a_mode, const std::string& b_mode, int session) {
        const auto a_pool = collect(report, a_mode, session, true);
        const auto b_pool = collect(report, b_mode, session, true);
        if (a_pool.size() != b_pool.size() || a_pool.size() < 2) return;
        ComparisonTest ct;
        ct.label = a_mode + " > " + b_mode + " (session " + std::to_string(session) + ", frames)";
        ct.ssim_test = paired_ttest_onetail(a_pool, b_pool);
        const auto a_err = collect(report, a_mode, session, false);
        const auto b_err = collect(report, b_mode, session, false);
        ct.nrmse_test = paired_ttest_onetail(b_err, a_err);
        report.tests.push_back(ct);

        if (config.seeds.size() >= 2) {
            std::vector<double> a_means, b_means, a_err_means, b_err_means;
            for (const auto seed : config.seeds) {
                const auto av = collect(report, a_mode, session, true, static_cast<int>(seed));
                const auto bv = collect(report, b_mode, session, true, static_cast<int>(seed));
                const auto ae = collect(report, a_mode, session, false, static_cast<int>(seed));
                const auto be = collect(report, b_mode, session, false, static_cast<int>(seed));
                if (av.empty() || bv.empty()) return;
                a_means.push_back(RVec::Map(av.data(), av.size()).mean());
                b_means.push_back(RVec::Map(bv.data(), bv.size()).mean());
                a_err_means.push_back(RVec::Map(ae.data(), ae.size()).mean());
                b_err_means.push_back(RVec::Map(be.data(), be.size()).mean());
            }
            ComparisonTest cs;
            cs.label = a_mode + " > " + b_mode + " (session " + std::to_string(session) +
                       ", per-seed means)";
            cs.ssim_test = paired_ttest_onetail(a_means, b_means);
            cs.nrmse_test = paired_ttest_onetail(b_err_means, a_err_means);
            report.tests.push_back(cs);
        }
    };
    if (want_long && want_single)
        for (std::size_t s = 0; s < n_sessions; ++s)
            add_test("longitudinal", "single_session", static_cast<int>(s + 1));
    if (want_pseudo && want_long)
        for (std::size_t s = 0; s < n_sessions; ++s)
            add_test("longitudinal", "pseudo_longitudinal", static_cast<int>(s + 1));

    report.write_csv(out_dir / "metrics.csv");
    report.write_summary(out_dir / "summary.txt");
    return report;
}

} // namespace longrad
