#pragma once

#include "mspint/allatonce.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mspint {

enum class FineKind { Sequential, AllAtOnce };

FineKind parse_fine_kind(const std::string& s);
std::string to_string(FineKind k);

struct PararealConfig {
    double T = 0.005;
    int N = 50;
    int M = 0;  // substeps per interval; 0 selects M = N
    double alpha = 0.5;
    FineKind fine = FineKind::AllAtOnce;
    double eps = 1e-14;
    int k_max = 100;
    int workers = 1;
    double wr_tol = 1e-12;
    int wr_max_iter = 50;

    int substeps() const { return M > 0 ? M : N; }
    TimeGrid time_grid() const { return {T, N, substeps()}; }
    void validate() const;
};

/// Coarse and fine propagators for one configuration, shared read-only by all intervals.
struct Propagators {
    std::unique_ptr<IntervalPropagator> coarse;
    std::unique_ptr<IntervalPropagator> fine;
};

Propagators make_propagators(const PararealConfig& cfg, const CoarseMatrices& mats,
                             const CoarseLoad& load);

struct PhaseTimes {
    double coarse = 0.0;  // G evaluations (initial sweep or correction sweep)
    double fine = 0.0;
    double correction = 0.0;
};

struct PararealRun {
    /// iterates[k][n]: state at t_n after iteration k (k = 0 is the coarse sweep).
    std::vector<std::vector<SplitState>> iterates;
    /// max_diff[k-1] compares iterate k with iterate k-1.
    std::vector<double> max_diff;
    std::vector<PhaseTimes> times;  // index k, entry 0 is the initial sweep
    /// wr_residuals[k-1][n]: inner residual history of interval n at iteration k.
    std::vector<std::vector<std::vector<double>>> wr_residuals;
    /// (iteration, interval) pairs whose fine solve hit its iteration cap.
    std::vector<std::pair<int, int>> fine_not_converged;
    bool converged = false;
    int iterations = 0;

    const std::vector<SplitState>& final_states() const { return iterates.back(); }
};

/// x_{n+1}^0 = G(x_n^0), n = 0..N-1.
std::vector<SplitState> initial_sweep(const IntervalPropagator& coarse, const SplitState& x0, int N);

/// F(x_n) for every interval, in parallel; results merged by interval index.
std::vector<PropagationResult> fine_sweep(const IntervalPropagator& fine,
                                          const std::vector<SplitState>& states, int workers);

/// x_{n+1}^{new} = F(x_n^{old}) + (G(x_n^{new}) - G(x_n^{old})).
/// `coarse_old[n]` holds G(x_n^{old}); on return it holds G(x_n^{new}).
std::vector<SplitState> correction_sweep(const IntervalPropagator& coarse,
                                         const std::vector<PropagationResult>& fine,
                                         const SplitState& x0, std::vector<SplitState>& coarse_old);

struct StopCheck {
    double max_diff = 0.0;
    bool stop = false;
};

/// max over n >= 1 of the Euclidean norm of the stacked (u, w) difference.
StopCheck check_stop(const std::vector<SplitState>& current, const std::vector<SplitState>& previous,
                     double eps);

PararealRun run_parareal(const PararealConfig& cfg, const IntervalPropagator& coarse,
                         const IntervalPropagator& fine, const SplitState& x0);

/// Sequential fine solution x_{n+1} = F(x_n), the parareal fixed point.
std::vector<SplitState> sequential_fine(const IntervalPropagator& fine, const SplitState& x0, int N);

}  // namespace mspint
