#pragma once

#include "mspint/grid_fem.hpp"
#include "mspint/parareal.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace mspint {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// INI experiment description. Sections and keys:
///
///   [grid]     n, H, layers
///   [field]    background, contrast, channels = "x0 x1 y0 y1; ..." (cell units, half-open)
///   [source]   kind = constant|box|cell, amplitude, box = "x0 x1 y0 y1", px, py, time_rate
///   [time]     T, N = "20 30 40", M (0: M = N)
///   [parareal] alpha, eps, k_max, fine = sequential|allatonce, workers, wr_tol, wr_max_iter
///   [output]   dir, timings, export_solution
struct ExperimentConfig {
    int n = 100;
    double H = 0.1;
    int layers = 3;

    double background = 1.0;
    double contrast = 1e4;
    std::vector<Channel> channels;

    SourceSpec source;

    double T = 0.005;
    std::vector<int> N_values{50};
    int M = 0;

    double alpha = 0.5;
    double eps = 1e-14;
    int k_max = 100;
    FineKind fine = FineKind::AllAtOnce;
    int workers = 1;
    double wr_tol = 1e-12;
    int wr_max_iter = 50;

    std::string output_dir = "out";
    bool timings = false;  // wall-clock numbers make reruns differ; off by default
    bool export_solution = true;

    void validate() const;
    PararealConfig parareal(int N) const;
};

/// `overrides` are "section.key=value" strings applied after the file is read.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical INI form of a config (round-trips through parse_config).
std::string to_ini(const ExperimentConfig& cfg);

}  // namespace mspint
