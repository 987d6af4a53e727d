#pragma once

#include <string>
#include <vector>

#include "rare/priors.hpp"
#include "rare/simulation.hpp"
#include "rare/solver.hpp"
#include "rare/training.hpp"

namespace rare {

// One study cell: sampling rate (fraction of the grid) at an input SNR.
struct CellConfig {
    double rate = 0.1;
    double snr_db = 30.0;
    std::string label() const; // e.g. "r10_s30"
};

// Full experiment description; serialized as versioned JSON and embedded in
// the run manifest for provenance.
struct ExperimentConfig {
    int version = 1;
    std::uint64_t seed = 1;

    int nx = 64, ny = 64, phases = 10;
    int objects = 1;
    int phantom_features = 5;

    int n_coils = 1;
    bool coils_uniform = true;

    std::vector<CellConfig> cells = {{0.10, 30.0}, {0.15, 30.0}, {0.20, 30.0},
                                     {0.10, 40.0}, {0.15, 40.0}, {0.20, 40.0}};
    std::vector<std::string> methods = {"zf", "cs-tv", "red", "rare-a2a"};

    int train_acquisitions = 4;
    double train_rate = 0.4;
    double train_snr_db = 30.0;
    TrainConfig train;
    NetArch arch;
    std::vector<double> red_sigmas = {0.02, 0.05};
    int red_draws = 2; // noise realizations per (object, sigma)

    SolverConfig solver;
    std::vector<double> tau_grid = {1.0};
    std::vector<double> lambda_grid = {1e-3};
    TVParams tv = {0.0, 40, 1.0, 1.0}; // lambda comes from the grid

    TransformEngine engine = TransformEngine::direct;
    double residual_factor = 10.0;

    void validate() const;
};

// Parse/serialize the JSON form. Parsing reports the offending field path.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// Pipeline stages. Each writes its outputs under out_dir and returns the path
// of its primary artifact. Later stages read the manifest written by
// cmd_simulate (out_dir + "/manifest.json").
std::string cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir);
std::string cmd_train(const std::string& out_dir);
std::string cmd_reconstruct(const std::string& out_dir,
                            const std::vector<std::string>& methods_override = {},
                            const std::vector<double>& tau_grid_override = {},
                            const std::vector<double>& lambda_grid_override = {},
                            bool resume = false);
std::string cmd_evaluate(const std::string& out_dir);
std::string cmd_report(const std::string& out_dir);

// simulate -> train -> reconstruct -> evaluate -> report.
void run_full_pipeline(const ExperimentConfig& cfg, const std::string& out_dir);

// Per-(method, object, cell) metrics against the stored groundtruth.
struct MetricRow {
    std::string method;
    int object = 0;
    std::string cell;
    double psnr_mean = 0.0;
    double ssim_mean = 0.0;
    std::vector<double> psnr_phase;
    std::vector<double> ssim_phase;
    bool identical = false; // some phase matched the reference exactly
};

std::vector<MetricRow> evaluate_rows(const std::string& out_dir);

} // namespace rare
