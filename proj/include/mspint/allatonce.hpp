#pragma once

#include "mspint/timestepping.hpp"

#include <complex>
#include <vector>

namespace mspint {

/// Time-stepping matrix of M backward-Euler substeps with an alpha-periodic corner:
///
///   B = 1/dt * [ 1            -alpha ]
///              [-1   1               ]
///              [     ...  ...        ]
///              [          -1     1   ]
///
/// B = S D S^{-1} with S = Lambda V, Lambda = diag(alpha^{-s/M}), V_{sk} = omega^{-sk},
/// omega = exp(-2 pi i / M) and d_k = (1 - alpha^{1/M} omega^k) / dt.
struct TimeMatrixB {
    int M = 1;
    double dt = 1.0;
    double alpha = 0.5;

    Mat dense() const;
    std::vector<std::complex<double>> eigenvalues() const;
    /// Diagonal of Lambda.
    Vec scaling() const;
    /// Explicit S = Lambda V (dense; for checks).
    CMat dense_S() const;
};

TimeMatrixB build_B(int M, double dt, double alpha);

/// Columns are time slots. P = S^{-1} F: scale by Lambda^{-1}, forward DFT along time, divide by M.
CMat apply_S_inverse(const TimeMatrixB& b, const CMat& block);
/// U = S Q: unnormalized inverse DFT along time, scale by Lambda.
CMat apply_S(const TimeMatrixB& b, const CMat& block);

struct AllAtOnceSolution {
    Mat U;                      // d1 x M
    double max_imag = 0.0;      // discarded imaginary residue
    double residual = 0.0;      // relative residual of the all-at-once system
};

/// Solves (B (x) M11 + I (x) A11) U = F through the diagonalization of B:
/// (a) P = S^{-1} F, (b) (d_k M11 + A11) Q_k = P_k for each k, (c) U = S Q.
/// The M complex factorizations are computed once.
class AllAtOnceSolver {
public:
    AllAtOnceSolver(const Mat& M11, const Mat& A11, const TimeMatrixB& b, int workers = 1);

    AllAtOnceSolution solve(const Mat& F) const;
    const TimeMatrixB& time_matrix() const { return b_; }

private:
    Mat M11_, A11_;
    TimeMatrixB b_;
    int workers_;
    std::vector<Eigen::PartialPivLU<CMat>> factors_;
};

/// Right-hand side of the all-at-once u-system for one WR sweep. Row s (1-based) is
///   F1(t0 + s dt) - M12 (w_{s-1} - w_{s-2}) / dt - A12 w_{s-1}
/// with w taken from the previous iterate, w_0 the interval start and w_{-1} = w_0,
/// plus M11 (u_0 - alpha * uM_prev) / dt in the first row.
Mat build_rhs(const CoarseMatrices& mats, const CoarseLoad& load, const TimeMatrixB& b,
              double t0, const Vec& u0, const Vec& w0, const Mat& W_prev, const Vec& uM_prev);

struct WRResult {
    PropagationResult result;  // final substep state; residual history inside
    Mat U, W;                  // d1 x M, d2 x M over the substeps
};

/// Waveform-relaxation fine propagator: alternates the all-at-once u-solve and
/// the sequential w-sweep
///   (M22/dt) w_s = M22 w_{s-1}/dt - M12^T (u_{s-1} - u_{s-2})/dt - A12^T u_s - A22 w_{s-1} + F2
/// until max_s|dU| + max_s|dW| <= tol * (max_s|U| + max_s|W|).
class WaveformRelaxation : public IntervalPropagator {
public:
    WaveformRelaxation(const CoarseMatrices& mats, CoarseLoad load, double interval, int substeps,
                       double alpha, double tol = 1e-12, int max_iter = 50, int workers = 1);

    PropagationResult propagate(const SplitState& start) const override;
    WRResult solve(const SplitState& start) const;

    const TimeMatrixB& time_matrix() const { return b_; }

private:
    CoarseMatrices mats_;
    CoarseLoad load_;
    TimeMatrixB b_;
    double tol_;
    int max_iter_;
    AllAtOnceSolver u_solver_;
    Eigen::LLT<Mat> w_factor_;
};

}  // namespace mspint
