#include "mspint/timestepping.hpp"

#include <cmath>
#include <random>

namespace mspint {

SplitState SplitState::at_rest(Vec u, Vec w, double t) {
    SplitState s;
    s.u = std::move(u);
    s.w = std::move(w);
    s.t = t;
    s.reset_lags();
    return s;
}

Vec SplitState::stacked() const {
    Vec x(u.size() + w.size());
    x << u, w;
    return x;
}

void TimeGrid::validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("time horizon must be positive");
    if (N < 1 || M < 1) throw std::invalid_argument("interval and substep counts must be >= 1");
}

SplitState project_initial(const Vec& u0, const MultiscaleSpace& space, const FineOperators& ops) {
    const Vec mu0 = ops.mass * u0;
    Vec u = Vec::Zero(space.d1()), w = Vec::Zero(space.d2());
    if (space.d1() > 0) u = space.mats.M11.llt().solve(space.psi1.transpose() * mu0);
    if (space.d2() > 0) w = space.mats.M22.llt().solve(space.psi2.transpose() * mu0);
    return SplitState::at_rest(std::move(u), std::move(w), 0.0);
}

SplittingStepper::SplittingStepper(const CoarseMatrices& mats, CoarseLoad load, double dt)
    : mats_(mats), load_(std::move(load)), dt_(dt) {
    mats_.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("splitting step needs dt > 0");
    if (mats_.d1() > 0) {
        u_factor_.compute(mats_.M11 / dt + mats_.A11);
        if (u_factor_.info() != Eigen::Success)
            throw NumericalError("splitting step: M11/dt + A11 is not SPD");
    }
    if (mats_.d2() > 0) {
        w_factor_.compute(mats_.M22);
        if (w_factor_.info() != Eigen::Success) throw NumericalError("splitting step: M22 is not SPD");
    }
}

SplitState SplittingStepper::step(const SplitState& s) const {
    const double t1 = s.t + dt_;
    const double g = load_.factor(t1);
    SplitState out;
    out.t = t1;
    out.u_prev = s.u;
    out.w_prev = s.w;

    out.u = Vec::Zero(mats_.d1());
    if (mats_.d1() > 0) {
        Vec rhs = mats_.M11 * s.u / dt_ + g * load_.f1;
        if (mats_.d2() > 0) rhs -= mats_.M12 * (s.w - s.w_prev) / dt_ + mats_.A12 * s.w;
        out.u = u_factor_.solve(rhs);
    }
    out.w = Vec::Zero(mats_.d2());
    if (mats_.d2() > 0) {
        Vec rhs = mats_.M22 * s.w / dt_ - mats_.A22 * s.w + g * load_.f2;
        if (mats_.d1() > 0)
            rhs -= mats_.M12.transpose() * (s.u - s.u_prev) / dt_ + mats_.A12.transpose() * out.u;
        out.w = w_factor_.solve(rhs * dt_);
    }
    return out;
}

SequentialSplitting::SequentialSplitting(const CoarseMatrices& mats, CoarseLoad load,
                                         double interval, int substeps)
    : stepper_(mats, std::move(load), interval / std::max(1, substeps)), substeps_(substeps) {
    if (substeps < 1) throw std::invalid_argument("fine propagator needs M >= 1");
}

PropagationResult SequentialSplitting::propagate(const SplitState& start) const {
    return propagate(start, {});
}

PropagationResult SequentialSplitting::propagate(
    const SplitState& start, const std::function<void(const SplitState&)>& observe) const {
    SplitState s = start;
    s.reset_lags();
    const double t0 = start.t;
    for (int m = 1; m <= substeps_; ++m) {
        s = stepper_.step(s);
        s.t = t0 + m * stepper_.dt();  // avoid drift from repeated addition
        if (observe) observe(s);
    }
    PropagationResult r;
    r.state = std::move(s);
    r.iterations = 1;
    return r;
}

CoarseStep::CoarseStep(const CoarseMatrices& mats, CoarseLoad load, double dt)
    : mats_(mats), load_(std::move(load)), dt_(dt) {
    mats_.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("coarse step needs dt > 0");
    const int d1 = mats_.d1(), d2 = mats_.d2();
    Mat k(d1 + d2, d1 + d2);
    k.topLeftCorner(d1, d1) = mats_.M11 / dt + mats_.A11;
    k.topRightCorner(d1, d2) = mats_.M12 / dt;
    k.bottomLeftCorner(d2, d1) = mats_.M12.transpose() / dt + mats_.A12.transpose();
    k.bottomRightCorner(d2, d2) = mats_.M22 / dt;
    factor_.compute(k);
    const double det_scale = k.cwiseAbs().maxCoeff();
    if (!(det_scale > 0.0) || factor_.rcond() < 1e-15)
        throw NumericalError("coarse step: singular coupled block system");
}

PropagationResult CoarseStep::propagate(const SplitState& start) const {
    const int d1 = mats_.d1(), d2 = mats_.d2();
    const double t1 = start.t + dt_;
    const double g = load_.factor(t1);
    Vec rhs(d1 + d2);
    rhs.head(d1) = mats_.M11 * start.u / dt_ + mats_.M12 * start.w / dt_ - mats_.A12 * start.w +
                   g * load_.f1;
    rhs.tail(d2) = mats_.M12.transpose() * start.u / dt_ + mats_.M22 * start.w / dt_ -
                   mats_.A22 * start.w + g * load_.f2;
    const Vec x = factor_.solve(rhs);
    PropagationResult r;
    r.state = SplitState::at_rest(x.head(d1), x.tail(d2), t1);
    r.iterations = 1;
    return r;
}

StabilityBound stability_bound(const CoarseMatrices& mats, double tol, int max_iter) {
    StabilityBound sb;
    const int d2 = mats.d2();
    if (d2 == 0 || mats.A22.cwiseAbs().maxCoeff() == 0.0) return sb;
    Eigen::LLT<Mat> m22(mats.M22);
    if (m22.info() != Eigen::Success) throw NumericalError("stability bound: M22 is not SPD");

    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vec x(d2);
    for (int i = 0; i < d2; ++i) x[i] = dist(rng);
    x /= std::sqrt(x.dot(mats.M22 * x));

    double rq = 0.0;
    sb.converged = false;
    for (int it = 1; it <= max_iter; ++it) {
        Vec y = m22.solve(mats.A22 * x);
        const double norm = std::sqrt(y.dot(mats.M22 * y));
        if (!(norm > 0.0)) break;
        x = y / norm;
        const double next = x.dot(mats.A22 * x);  // x is M22-normalized
        sb.iterations = it;
        if (std::abs(next - rq) <= tol * std::abs(next)) {
            rq = next;
            sb.converged = true;
            break;
        }
        rq = next;
    }
    sb.lambda_max = rq;
    sb.dt_max = rq > 0.0 ? 2.0 / rq : std::numeric_limits<double>::infinity();
    if (!sb.converged)
        throw NumericalError("stability bound: power iteration did not converge (last Rayleigh quotient " +
                             std::to_string(rq) + ")");
    return sb;
}

double split_mass_energy(const CoarseMatrices& mats, const Vec& u, const Vec& w) {
    double e = 0.0;
    if (mats.d1() > 0) e += u.dot(mats.M11 * u);
    if (mats.d2() > 0) e += w.dot(mats.M22 * w);
    if (mats.d1() > 0 && mats.d2() > 0) e += 2.0 * u.dot(mats.M12 * w);
    return e;
}

double split_stiffness_energy(const CoarseMatrices& mats, const Vec& u, const Vec& w) {
    double e = 0.0;
    if (mats.d1() > 0) e += u.dot(mats.A11 * u);
    if (mats.d2() > 0) e += w.dot(mats.A22 * w);
    if (mats.d1() > 0 && mats.d2() > 0) e += 2.0 * u.dot(mats.A12 * w);
    return e;
}

}  // namespace mspint
