// One line per acceptance criterion; exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]

#include "mspint/experiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

using namespace mspint;

namespace {

const std::string kExample1 = std::string(MSPINT_SOURCE_DIR) + "/configs/example1.ini";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", x);
    return b;
}

ExperimentConfig example1(std::vector<std::string> overrides = {}) {
    overrides.push_back("output.export_solution=false");
    return load_config(kExample1, overrides);
}

double max_state_diff(const std::vector<SplitState>& a, const std::vector<SplitState>& b) {
    double d = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, (a[n].stacked() - b[n].stacked()).norm());
    return d;
}

double max_state_norm(const std::vector<SplitState>& a) {
    double d = 0.0;
    for (const auto& s : a) d = std::max(d, s.stacked().norm());
    return d;
}

// Two thin channels on a 20 x 20 grid with 2 x 2 coarse blocks; gamma is about 0.38.
Pipeline small_gamma_pipeline() {
    ExperimentConfig c;
    c.n = 20;
    c.H = 0.5;
    c.layers = 1;
    c.background = 1.0;
    c.contrast = 1e4;
    c.channels = {{3, 7, 4, 5}, {13, 17, 14, 15}};
    c.source.kind = SourceKind::Constant;
    c.source.amplitude = 1.0;
    return build_pipeline(c);
}

// 1. parareal with k = N reproduces the sequential fine solution
Outcome parareal_exactness() {
    const Pipeline p = build_pipeline(example1({"time.T=0.001"}));
    std::string detail;
    bool pass = true;
    for (FineKind kind : {FineKind::Sequential, FineKind::AllAtOnce}) {
        PararealConfig pc = p.cfg.parareal(10);
        pc.M = 10;
        pc.k_max = 10;
        pc.eps = 1e-300;
        pc.fine = kind;
        const Propagators props = make_propagators(pc, p.space.mats, p.load);
        const SplitState x0 = project_initial(Vec::Zero(p.grid.interior_count()), p.space, p.ops);
        const PararealRun run = run_parareal(pc, *props.coarse, *props.fine, x0);
        const auto seq = sequential_fine(*props.fine, x0, pc.N);
        const double rel = max_state_diff(run.iterates.at(10), seq) / max_state_norm(seq);
        pass = pass && run.iterations == 10 && rel <= 1e-12;
        detail += to_string(kind) + " rel " + fmt(rel) + "; ";
    }
    detail += "fine dt " + fmt(0.001 / 100) + " <= dt_max " + fmt(p.stability.dt_max);
    return {pass, detail};
}

std::vector<RunReport> example1_reports;

const std::vector<RunReport>& example1_runs() {
    if (example1_reports.empty()) {
        const Pipeline p = build_pipeline(example1());
        for (int N : p.cfg.N_values) example1_reports.push_back(run_single(p, N));
    }
    return example1_reports;
}

// 2. iteration counts on the Example-1 analog
Outcome iteration_plateau() {
    const auto& runs = example1_runs();
    bool pass = true;
    std::string detail = "counts";
    int c20 = -1, c60 = -1;
    for (const auto& r : runs) {
        detail += " N" + std::to_string(r.N) + "=" + std::to_string(r.iterations);
        pass = pass && r.converged && r.iterations >= 8 && r.iterations <= 25;
        if (r.N == 20) c20 = r.iterations;
        if (r.N == 60) c60 = r.iterations;
    }
    pass = pass && c20 > 0 && c60 > 0 && c60 <= c20 + 2;
    return {pass, detail + " (band [8, 25], N60 <= N20 + 2)"};
}

// 3. diagonalized all-at-once solve against the dense Kronecker system
Outcome allatonce_oracle() {
    const Pipeline p = build_pipeline(example1());
    const auto& m = p.space.mats;
    const int d1 = m.d1(), M = 16;
    if (d1 < 1 || d1 > 20) return {false, "d1 = " + std::to_string(d1) + " outside [1, 20]"};
    std::mt19937 rng(2024);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (double alpha : {0.1, 0.5, 0.9}) {
        const TimeMatrixB b = build_B(M, p.cfg.T / (20.0 * M), alpha);
        const AllAtOnceSolver solver(m.M11, m.A11, b);
        Mat F(d1, M);
        for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = g(rng);
        const Mat U = solver.solve(F).U;
        const Mat B = b.dense();
        Mat K = Mat::Zero(d1 * M, d1 * M);
        for (int s = 0; s < M; ++s) {
            for (int r = 0; r < M; ++r) K.block(s * d1, r * d1, d1, d1) = B(s, r) * m.M11;
            K.block(s * d1, s * d1, d1, d1) += m.A11;
        }
        const Vec x = K.fullPivLu().solve(Eigen::Map<const Vec>(F.data(), F.size()));
        worst = std::max(worst, (Eigen::Map<const Vec>(U.data(), U.size()) - x).norm() / x.norm());
    }
    return {worst <= 1e-8, "d1 = " + std::to_string(d1) + ", M = 16, max rel " + fmt(worst) + " (tol 1e-8)"};
}

// 4. B = S D S^-1
Outcome diagonalization_identity() {
    double worst = 0.0;
    for (int M : {2, 4, 8, 16, 32, 64})
        for (double alpha : {0.1, 0.5, 0.9}) {
            const TimeMatrixB b = build_B(M, 1e-3, alpha);
            const CMat S = b.dense_S();
            const auto d = b.eigenvalues();
            CVec dv(M);
            for (int k = 0; k < M; ++k) dv[k] = d[k];
            const Mat B = b.dense();
            const CMat rec = S * dv.asDiagonal() * S.inverse();
            worst = std::max(worst, (rec - B.cast<std::complex<double>>()).norm() / B.norm());
        }
    return {worst <= 1e-10, "max rel " + fmt(worst) + " (tol 1e-10)"};
}

// 5. WR fixed point and contraction
Outcome wr_fixed_point() {
    const Pipeline p = small_gamma_pipeline();
    const auto& m = p.space.mats;
    const double gamma = p.angle.gamma;
    const double interval = 0.002;
    const int M = 10;
    const SplitState x0 = SplitState::at_rest(Vec::Zero(m.d1()), Vec::Zero(m.d2()), 0.0);
    const SplitState ref = SequentialSplitting(m, p.load, interval, M).propagate(x0).state;
    const double scale = ref.stacked().norm();
    bool pass = gamma <= 0.5;
    std::string detail = "gamma " + fmt(gamma) + ";";
    double ratio = 0.0;
    for (double alpha : {0.1, 0.5, 0.9}) {
        const WaveformRelaxation wr(m, p.load, interval, M, alpha, 1e-14, 500);
        const PropagationResult r = wr.propagate(x0);
        const double err = (r.state.stacked() - ref.stacked()).norm() / scale;
        pass = pass && r.converged && err <= 1e-10;
        detail += " alpha " + fmt(alpha) + " err " + fmt(err) + ";";
        if (alpha == 0.1) {
            // geometric-mean ratio from the second iterate until the residual drops below 1e-10 of the first
            const auto& res = r.residuals;
            std::size_t last = 1;
            while (last + 1 < res.size() && res[last + 1] > 1e-10 * res[0]) ++last;
            if (last < 2) return {false, detail + " too few WR iterations to measure a ratio"};
            ratio = std::pow(res[last] / res[1], 1.0 / static_cast<double>(last - 1));
        }
    }
    pass = pass && ratio <= gamma * gamma + 0.2;
    detail += " ratio(alpha 0.1) " + fmt(ratio) + " <= gamma^2 + 0.2 = " + fmt(gamma * gamma + 0.2);
    return {pass, detail};
}

// 6. iteration count at contrast 1e2 vs 1e6
Outcome contrast_robustness() {
    int counts[2];
    std::string detail;
    const double contrasts[2] = {1e2, 1e6};
    for (int i = 0; i < 2; ++i) {
        const Pipeline p = build_pipeline(example1({"field.contrast=" + fmt(contrasts[i]), "time.N=40"}));
        const RunReport r = run_single(p, 40);
        if (!r.converged) return {false, "contrast " + fmt(contrasts[i]) + " did not converge"};
        counts[i] = r.iterations;
        detail += "contrast " + fmt(contrasts[i]) + ": " + std::to_string(r.iterations) + " iterations (dt_max " +
                  fmt(r.dt_max) + "); ";
    }
    const double rel = std::abs(counts[0] - counts[1]) / static_cast<double>(std::min(counts[0], counts[1]));
    return {rel <= 0.5, detail + "relative difference " + fmt(rel) + " (tol 0.5)"};
}

// 7. error of the converged solution against the fine reference at T
Outcome spatial_fidelity() {
    const auto& runs = example1_runs();
    double worst = 0.0;
    bool pass = true;
    for (const auto& r : runs) {
        worst = std::max(worst, r.error.value);
        pass = pass && r.converged && !r.error.absolute;
    }
    return {pass && worst <= 0.05, "max relative error over N " + fmt(worst) + " (tol 5e-2)"};
}

// 8. invariants via the check routine
Outcome structural_invariants() {
    const auto lines = run_checks(example1());
    bool pass = !lines.empty();
    std::string failed;
    for (const auto& l : lines)
        if (!l.pass) {
            pass = false;
            failed += " " + l.name + " (" + l.detail + ")";
        }
    return {pass, std::to_string(lines.size()) + " checks" + (failed.empty() ? ", all pass" : ", failed:" + failed)};
}

// 9. max_diff decreases strictly until saturation on a homogeneous problem
Outcome convergence_order() {
    ExperimentConfig c;
    c.n = 20;
    c.H = 0.25;
    c.layers = 1;
    c.source.kind = SourceKind::Constant;
    const Pipeline p = build_pipeline(c);
    const int N = 12;
    PararealConfig pc;
    pc.N = N;
    pc.M = 10;
    pc.T = 0.9 * p.stability.dt_max * N;
    pc.fine = FineKind::Sequential;
    pc.eps = 1e-300;
    pc.k_max = N;
    const Propagators props = make_propagators(pc, p.space.mats, p.load);
    const SplitState x0 = SplitState::at_rest(Vec::Zero(p.space.d1()), Vec::Zero(p.space.d2()), 0.0);
    const PararealRun run = run_parareal(pc, *props.coarse, *props.fine, x0);
    const double floor = 1e-13 * max_state_norm(run.final_states());
    std::string detail = "d1 = " + std::to_string(p.space.d1()) + ", max_diff";
    bool pass = run.max_diff.size() >= 3;
    std::size_t k = 0;
    for (; k < run.max_diff.size() && run.max_diff[k] > floor; ++k) {
        detail += " " + fmt(run.max_diff[k]);
        if (k > 0 && !(run.max_diff[k] < run.max_diff[k - 1])) pass = false;
    }
    pass = pass && k >= 3;
    return {pass, detail + " (" + std::to_string(k) + " iterates above the 1e-13 floor)"};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"parareal_exactness", parareal_exactness},
        {"iteration_count_plateau", iteration_plateau},
        {"allatonce_oracle_equivalence", allatonce_oracle},
        {"diagonalization_identity", diagonalization_identity},
        {"wr_fixed_point_and_contraction", wr_fixed_point},
        {"contrast_robustness", contrast_robustness},
        {"spatial_fidelity", spatial_fidelity},
        {"structural_invariants", structural_invariants},
        {"convergence_order_probe", convergence_order},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failures ? 1 : 0;
}
