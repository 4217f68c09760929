#include "mspint/allatonce.hpp"

#include <unsupported/Eigen/FFT>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mspint {

TimeMatrixB build_B(int M, double dt, double alpha) {
    if (M < 1) throw std::invalid_argument("time matrix needs M >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("time matrix needs dt > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    return {M, dt, alpha};
}

Mat TimeMatrixB::dense() const {
    Mat b = Mat::Identity(M, M);
    for (int s = 1; s < M; ++s) b(s, s - 1) = -1.0;
    b(0, M - 1) -= alpha;  // for M = 1 this lands on the diagonal
    return b / dt;
}

std::vector<std::complex<double>> TimeMatrixB::eigenvalues() const {
    std::vector<std::complex<double>> d(M);
    const double root = std::pow(alpha, 1.0 / M);
    for (int k = 0; k < M; ++k) {
        const std::complex<double> omega_k = std::polar(1.0, -2.0 * std::numbers::pi * k / M);
        d[k] = (1.0 - root * omega_k) / dt;
    }
    return d;
}

Vec TimeMatrixB::scaling() const {
    Vec l(M);
    for (int s = 0; s < M; ++s) l[s] = std::pow(alpha, -static_cast<double>(s) / M);
    return l;
}

CMat TimeMatrixB::dense_S() const {
    const Vec l = scaling();
    CMat s(M, M);
    for (int r = 0; r < M; ++r)
        for (int k = 0; k < M; ++k)
            s(r, k) = l[r] * std::polar(1.0, 2.0 * std::numbers::pi * r * k / M);
    return s;
}

CMat apply_S_inverse(const TimeMatrixB& b, const CMat& block) {
    if (block.cols() != b.M) throw std::invalid_argument("block width must equal M");
    if (b.M == 1) return block;  // kissfft does not handle length 1
    const Vec l = b.scaling();
    Eigen::FFT<double> fft;
    CMat out(block.rows(), block.cols());
    std::vector<std::complex<double>> in(b.M), freq(b.M);
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (int s = 0; s < b.M; ++s) in[s] = block(r, s) / l[s];
        fft.fwd(freq, in);
        for (int k = 0; k < b.M; ++k) out(r, k) = freq[k] / static_cast<double>(b.M);
    }
    return out;
}

CMat apply_S(const TimeMatrixB& b, const CMat& block) {
    if (block.cols() != b.M) throw std::invalid_argument("block width must equal M");
    if (b.M == 1) return block;  // kissfft does not handle length 1
    const Vec l = b.scaling();
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    CMat out(block.rows(), block.cols());
    std::vector<std::complex<double>> in(b.M), time(b.M);
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (int k = 0; k < b.M; ++k) in[k] = block(r, k);
        fft.inv(time, in);
        for (int s = 0; s < b.M; ++s) out(r, s) = l[s] * time[s];
    }
    return out;
}

AllAtOnceSolver::AllAtOnceSolver(const Mat& M11, const Mat& A11, const TimeMatrixB& b, int workers)
    : M11_(M11), A11_(A11), b_(b), workers_(std::max(1, workers)) {
    if (M11.rows() != A11.rows()) throw std::invalid_argument("M11 and A11 sizes differ");
    factors_.resize(b.M);
    if (M11.rows() == 0) return;
    const auto d = b.eigenvalues();
    const CMat m = M11.cast<std::complex<double>>();
    const CMat a = A11.cast<std::complex<double>>();
#pragma omp parallel for schedule(static) num_threads(workers_)
    for (int k = 0; k < b.M; ++k) factors_[k].compute(d[k] * m + a);
    for (int k = 0; k < b.M; ++k)
        if (!(std::abs(factors_[k].determinant()) > 0.0) || factors_[k].rcond() < 1e-15)
            throw NumericalError("all-at-once solve: singular block system for k = " + std::to_string(k));
}

AllAtOnceSolution AllAtOnceSolver::solve(const Mat& F) const {
    AllAtOnceSolution sol;
    const int d1 = static_cast<int>(M11_.rows());
    if (F.rows() != d1 || F.cols() != b_.M) throw std::invalid_argument("all-at-once rhs has wrong shape");
    if (d1 == 0) {
        sol.U = Mat::Zero(0, b_.M);
        return sol;
    }
    const CMat P = apply_S_inverse(b_, F.cast<std::complex<double>>());
    CMat Q(d1, b_.M);
#pragma omp parallel for schedule(static) num_threads(workers_)
    for (int k = 0; k < b_.M; ++k) Q.col(k) = factors_[k].solve(P.col(k));
    const CMat U = apply_S(b_, Q);
    sol.U = U.real();
    sol.max_imag = U.imag().cwiseAbs().maxCoeff();

    const Mat res = M11_ * sol.U * b_.dense().transpose() + A11_ * sol.U - F;
    const double fn = F.norm();
    sol.residual = fn > 0.0 ? res.norm() / fn : res.norm();
    return sol;
}

Mat build_rhs(const CoarseMatrices& mats, const CoarseLoad& load, const TimeMatrixB& b, double t0,
              const Vec& u0, const Vec& w0, const Mat& W_prev, const Vec& uM_prev) {
    const int d1 = mats.d1(), d2 = mats.d2(), M = b.M;
    Mat F(d1, M);
    if (d1 == 0) return F;
    for (int s = 0; s < M; ++s) {
        // 0-based slot s holds substep s+1; w_{s} and w_{s-1} in 1-based terms.
        F.col(s) = load.factor(t0 + (s + 1) * b.dt) * load.f1;
        if (d2 > 0) {
            const Vec& w_lag1 = s >= 1 ? Vec(W_prev.col(s - 1)) : w0;
            const Vec& w_lag2 = s >= 2 ? Vec(W_prev.col(s - 2)) : w0;
            F.col(s) -= mats.M12 * (w_lag1 - w_lag2) / b.dt + mats.A12 * w_lag1;
        }
    }
    F.col(0) += mats.M11 * (u0 - b.alpha * uM_prev) / b.dt;
    return F;
}

WaveformRelaxation::WaveformRelaxation(const CoarseMatrices& mats, CoarseLoad load, double interval,
                                       int substeps, double alpha, double tol, int max_iter,
                                       int workers)
    : mats_(mats),
      load_(std::move(load)),
      b_(build_B(substeps, interval / std::max(1, substeps), alpha)),
      tol_(tol),
      max_iter_(max_iter),
      u_solver_(mats.M11, mats.A11, b_, workers) {
    mats_.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("WR tolerance must be positive");
    if (max_iter < 1) throw std::invalid_argument("WR needs max_iter >= 1");
    if (mats_.d2() > 0) {
        w_factor_.compute(mats_.M22);
        if (w_factor_.info() != Eigen::Success) throw NumericalError("WR: M22 is not SPD");
    }
}

PropagationResult WaveformRelaxation::propagate(const SplitState& start) const {
    return solve(start).result;
}

namespace {

double max_col_norm(const Mat& m) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) best = std::max(best, m.col(c).norm());
    return best;
}

}  // namespace

WRResult WaveformRelaxation::solve(const SplitState& start) const {
    const int d1 = mats_.d1(), d2 = mats_.d2(), M = b_.M;
    const double dt = b_.dt;
    const double t0 = start.t;
    const Vec& u0 = start.u;
    const Vec& w0 = start.w;

    // Iteration-0 seed: initial values held constant in time.
    Mat U_prev = u0.replicate(1, M);
    Mat W_prev = w0.replicate(1, M);
    Vec uM_prev = u0;

    WRResult out;
    PropagationResult& pr = out.result;
    pr.converged = false;
    double best = std::numeric_limits<double>::infinity();

    for (int j = 1; j <= max_iter_; ++j) {
        const Mat F = build_rhs(mats_, load_, b_, t0, u0, w0, W_prev, uM_prev);
        const Mat U = u_solver_.solve(F).U;

        Mat W(d2, M);
        if (d2 > 0) {
            Vec w = w0;
            for (int s = 0; s < M; ++s) {
                const double g = load_.factor(t0 + (s + 1) * dt);
                Vec rhs = mats_.M22 * w / dt - mats_.A22 * w + g * load_.f2;
                if (d1 > 0) {
                    const Vec u_lag1 = s >= 1 ? Vec(U.col(s - 1)) : u0;
                    const Vec u_lag2 = s >= 2 ? Vec(U.col(s - 2)) : u0;
                    rhs -= mats_.M12.transpose() * (u_lag1 - u_lag2) / dt + mats_.A12.transpose() * U.col(s);
                }
                w = w_factor_.solve(rhs * dt);
                W.col(s) = w;
            }
        }

        const double r = max_col_norm(U - U_prev) + max_col_norm(W - W_prev);
        const double scale = max_col_norm(U) + max_col_norm(W);
        pr.residuals.push_back(r);
        pr.iterations = j;
        if (r < best || j == 1) {
            best = r;
            out.U = U;
            out.W = W;
        }
        if (r <= tol_ * scale) {
            pr.converged = true;
            out.U = U;
            out.W = W;
            break;
        }
        U_prev = U;
        W_prev = W;
        if (d1 > 0) uM_prev = U.col(M - 1);
    }

    SplitState s;
    s.t = t0 + M * dt;
    s.u = d1 > 0 ? Vec(out.U.col(M - 1)) : Vec::Zero(0);
    s.w = d2 > 0 ? Vec(out.W.col(M - 1)) : Vec::Zero(0);
    s.u_prev = (M >= 2 && d1 > 0) ? Vec(out.U.col(M - 2)) : u0;
    s.w_prev = (M >= 2 && d2 > 0) ? Vec(out.W.col(M - 2)) : w0;
    pr.state = std::move(s);
    return out;
}

}  // namespace mspint
