#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "longrad/array_io.hpp"
#include "longrad/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::string& seeds_csv, const std::vector<std::string>& modes) {
    longrad::ExperimentConfig cfg;
    try {
        cfg = longrad::load_config(config_path);
        if (!out_override.empty()) cfg.output.dir = out_override;
        if (!seeds_csv.empty()) {
            cfg.seeds.clear();
            std::stringstream ss(seeds_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) cfg.seeds.push_back(std::stoull(tok));
        }
        if (!modes.empty()) {
            cfg.modes.clear();
            for (const auto& m : modes) cfg.modes.push_back(longrad::run_mode_from_string(m));
        }
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        std::cout << "running " << cfg.name << " -> " << cfg.output.dir.string() << "\n";
        const auto report = longrad::run_experiment(cfg);
        std::cout << "wrote " << (cfg.output.dir / "metrics.csv").string() << " ("
                  << report.per_frame.size() << " rows)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_inspect(const std::string& path) {
    try {
        const auto h = longrad::peek_header(path);
        std::cout << path << ": dtype=";
        switch (h.dtype) {
            case longrad::Dtype::f32: std::cout << "f32"; break;
            case longrad::Dtype::f64: std::cout << "f64"; break;
            case longrad::Dtype::c64: std::cout << "c64"; break;
            case longrad::Dtype::c128: std::cout << "c128"; break;
        }
        std::cout << " dims=[";
        for (std::size_t i = 0; i < h.dims.size(); ++i)
            std::cout << (i ? "," : "") << h.dims[i];
        std::cout << "] elements=" << h.element_count() << "\n";

        std::filesystem::path side(path);
        side.replace_extension(".json");
        if (std::filesystem::exists(side)) {
            std::ifstream is(side);
            nlohmann::json j;
            is >> j;
            std::cout << "sidecar " << side.string() << ":\n" << j.dump(2) << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "inspect error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"longitudinal golden-angle radial MRI simulation and reconstruction"};
    app.require_subcommand(1);

    std::string config_path, out_override, seeds_csv, artifact;
    std::vector<std::string> modes;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_override, "output directory override");
    run->add_option("--seeds", seeds_csv, "comma-separated seed list override");
    run->add_option("--modes", modes,
                    "modes to run (reference single_session longitudinal pseudo_longitudinal)");

    auto* inspect = app.add_subcommand("inspect", "print the header of a binary array artifact");
    inspect->add_option("artifact", artifact, "path to a .lra file")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, out_override, seeds_csv, modes);
    if (inspect->parsed()) return cmd_inspect(artifact);
    return 2;
}
