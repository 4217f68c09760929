#pragma once

#include "mspint/cem.hpp"
#include "mspint/config.hpp"
#include "mspint/io.hpp"
#include "mspint/parareal.hpp"

#include <string>
#include <vector>

namespace mspint {

/// Exit-code classes of the command line tool.
enum class FailureClass { Usage = 1, Numerical = 2, Io = 3, Check = 4 };

/// Failure of one pipeline stage ("grid", "field", "basis", "space", "parareal", ...).
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, FailureClass kind, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), kind_(kind) {}
    const std::string& stage() const { return stage_; }
    FailureClass kind() const { return kind_; }

private:
    std::string stage_;
    FailureClass kind_;
};

/// Everything between the config and the time integration.
struct Pipeline {
    ExperimentConfig cfg;
    FineGrid grid;
    PermeabilityField field;
    FineOperators ops;
    CoarsePartition partition;
    ContinuumDecomposition continua;
    std::vector<LocalBasis> bases;
    MultiscaleSpace space;
    SubspaceAngle angle;
    StabilityBound stability;
    double constraint_residual = 0.0;  // max over all NLMC bases
    Vec fine_load;                     // spatial load at t = 0
    CoarseLoad load;
};

Pipeline build_pipeline(const ExperimentConfig& cfg);

struct ErrorValue {
    double value = 0.0;
    bool absolute = false;  // reference norm was zero
};

/// ||u_ref - u||_M / ||u_ref||_M with the fine mass matrix; the absolute norm when u_ref = 0.
ErrorValue relative_error(const FineOperators& ops, const Vec& reference, const Vec& approx);

struct RunReport {
    int N = 0;
    int M = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> max_diff;       // per iteration 1..K
    std::vector<double> error_history;  // relative error at T of iterate 1..K
    ErrorValue error;                   // of the final iterate
    double gamma = 0.0;
    double dt_max = 0.0;
    double fine_dt = 0.0;
    double wall_time = 0.0;
    std::vector<PhaseTimes> times;
    std::vector<std::vector<std::vector<double>>> wr_residuals;
    int fine_not_converged = 0;
    Vec solution;   // fine interior vector at T
    Vec reference;  // backward Euler at the fine step
};

/// Final fine-grid state of the reference solve at step T / (N M).
Vec reference_at_T(const Pipeline& p, int N);

RunReport run_single(const Pipeline& p, int N);

std::string iterations_csv(std::vector<RunReport> reports, bool timings);
std::string convergence_csv(const RunReport& r);
std::string wr_residuals_csv(const RunReport& r);
std::string timings_csv(const RunReport& r);
std::string summary_text(const Pipeline& p, const std::vector<RunReport>& reports);

/// Cell values as an n x n grid, row = y.
Mat cell_grid(const FineGrid& grid, const std::vector<double>& values);

struct ExperimentResult {
    std::vector<RunReport> reports;
    std::vector<std::string> files;
};

/// Runs every N of the config and writes all artifacts to cfg.output_dir.
/// On failure the files written so far are removed.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

enum class BasisKind { Nlmc, Cem };

/// Builds the requested multiscale basis and writes it with its diagnostics.
std::vector<std::string> export_basis(const ExperimentConfig& cfg, BasisKind kind, const std::string& dir);

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Structural invariants of the configured problem.
std::vector<CheckLine> run_checks(const ExperimentConfig& cfg);

/// Maps any exception from the library onto a stage-tagged error.
[[noreturn]] void rethrow_tagged(const std::string& stage);

}  // namespace mspint
