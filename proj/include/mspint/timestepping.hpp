#pragma once

#include "mspint/multiscale_space.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace mspint {

/// Coefficients in V_H1 (u) and V_H2 (w) with the lagged values used by the
/// two-step coupling terms.
struct SplitState {
    Vec u, w;
    Vec u_prev, w_prev;
    double t = 0.0;

    /// State with lags equal to the current values.
    static SplitState at_rest(Vec u, Vec w, double t);
    void reset_lags() {
        u_prev = u;
        w_prev = w;
    }
    /// [u; w]
    Vec stacked() const;
};

struct TimeGrid {
    double T = 0.0;
    int N = 1;  // coarse intervals
    int M = 1;  // substeps per interval

    double coarse_dt() const { return T / N; }
    double fine_dt() const { return T / (static_cast<double>(N) * M); }
    double interval_start(int n) const { return n * coarse_dt(); }
    void validate() const;
};

/// L2 projection of a fine interior vector onto each subspace separately.
SplitState project_initial(const Vec& u0, const MultiscaleSpace& space, const FineOperators& ops);

/// Result of propagating a state across one coarse interval.
struct PropagationResult {
    SplitState state;
    int iterations = 0;
    bool converged = true;
    std::vector<double> residuals;
};

/// Maps the state at the start of a coarse interval to the state at its end.
/// Implementations are immutable after construction and safe to call concurrently.
class IntervalPropagator {
public:
    virtual ~IntervalPropagator() = default;
    virtual PropagationResult propagate(const SplitState& start) const = 0;
};

/// Partially explicit splitting step of size dt:
///   (M11/dt + A11) u+ = M11 u/dt - M12 (w - w_prev)/dt - A12 w + F1(t+dt)
///   (M22/dt) w+       = M22 w/dt - M12^T (u - u_prev)/dt - A12^T u+ - A22 w + F2(t+dt)
class SplittingStepper {
public:
    SplittingStepper(const CoarseMatrices& mats, CoarseLoad load, double dt);

    SplitState step(const SplitState& s) const;
    double dt() const { return dt_; }

private:
    CoarseMatrices mats_;
    CoarseLoad load_;
    double dt_;
    Eigen::LLT<Mat> u_factor_;  // M11/dt + A11
    Eigen::LLT<Mat> w_factor_;  // M22
};

/// Fine propagator: M splitting steps of size dt/M, lags reset at the interval start.
class SequentialSplitting : public IntervalPropagator {
public:
    SequentialSplitting(const CoarseMatrices& mats, CoarseLoad load, double interval, int substeps);

    PropagationResult propagate(const SplitState& start) const override;
    /// Same as propagate, calling `observe` after every substep.
    PropagationResult propagate(const SplitState& start,
                                const std::function<void(const SplitState&)>& observe) const;
    int substeps() const { return substeps_; }

private:
    SplittingStepper stepper_;
    int substeps_;
};

/// Coupled one-step scheme over a whole interval: both subspace equations share
/// the increments (u+ - u)/dt and (w+ - w)/dt and the stiffness acts on u+ + w:
///   [M11/dt + A11     M12/dt] [u+]   [M11 u/dt + M12 w/dt - A12 w + F1]
///   [M12^T/dt + A12^T M22/dt] [w+] = [M12^T u/dt + M22 w/dt - A22 w + F2]
class CoarseStep : public IntervalPropagator {
public:
    CoarseStep(const CoarseMatrices& mats, CoarseLoad load, double dt);

    PropagationResult propagate(const SplitState& start) const override;

private:
    CoarseMatrices mats_;
    CoarseLoad load_;
    double dt_;
    Eigen::PartialPivLU<Mat> factor_;
};

struct StabilityBound {
    double dt_max = std::numeric_limits<double>::infinity();
    double lambda_max = 0.0;
    int iterations = 0;
    bool converged = true;
};

/// dt_max = 2 / lambda_max(M22^{-1} A22) by power iteration on the generalized problem.
StabilityBound stability_bound(const CoarseMatrices& mats, double tol = 1e-12, int max_iter = 20000);

/// ||u + w||_M^2 = [u;w]^T [[M11, M12],[M12^T, M22]] [u;w].
double split_mass_energy(const CoarseMatrices& mats, const Vec& u, const Vec& w);
/// ||u + w||_a^2 with the stiffness blocks.
double split_stiffness_energy(const CoarseMatrices& mats, const Vec& u, const Vec& w);

}  // namespace mspint
