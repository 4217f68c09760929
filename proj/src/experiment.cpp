#include "mspint/experiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <sstream>

namespace mspint {

void rethrow_tagged(const std::string& stage) {
    try {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const ConfigError& e) {
        throw StageError(stage, FailureClass::Usage, e.what());
    } catch (const IoError& e) {
        throw StageError(stage, FailureClass::Io, e.what());
    } catch (const NumericalError& e) {
        throw StageError(stage, FailureClass::Numerical, e.what());
    } catch (const std::invalid_argument& e) {
        throw StageError(stage, FailureClass::Usage, e.what());
    } catch (const std::exception& e) {
        throw StageError(stage, FailureClass::Numerical, e.what());
    }
}

namespace {

template <class F>
auto stage(const std::string& name, F&& f) {
    try {
        return f();
    } catch (...) {
        rethrow_tagged(name);
    }
}

std::string num(double x) { return format_number(x); }

}  // namespace

Pipeline build_pipeline(const ExperimentConfig& cfg) {
    Pipeline p;
    p.cfg = cfg;
    stage("config", [&] { cfg.validate(); return 0; });
    p.grid = stage("grid", [&] { return build_fine_grid(cfg.n, cfg.n); });
    p.field = stage("field", [&] { return generate_field(cfg.channels, cfg.background, cfg.contrast, p.grid); });
    p.ops = stage("operators", [&] { return assemble_fine(p.grid, p.field); });
    p.partition = stage("partition", [&] { return build_coarse_partition(p.grid, cfg.H, cfg.layers); });
    p.continua = stage("continua", [&] { return detect_continua(p.partition, p.field); });
    p.bases = stage("basis", [&] { return build_nlmc_bases(p.continua, p.partition, p.ops, cfg.workers); });
    p.constraint_residual = stage("basis", [&] {
        double r = 0.0;
        for (const auto& b : p.bases) r = std::max(r, nlmc_constraint_residual(b, p.continua, p.partition));
        return r;
    });
    p.space = stage("space", [&] { return split_spaces(p.bases, p.ops, p.field, p.partition); });
    p.angle = stage("space", [&] { return subspace_angle(p.space.mats); });
    p.stability = stage("stability", [&] { return stability_bound(p.space.mats); });
    p.fine_load = stage("source", [&] { return assemble_load(p.grid, cfg.source, 0.0); });
    p.load = stage("source", [&] { return project_load(p.space, p.fine_load, cfg.source.time_rate); });
    return p;
}

ErrorValue relative_error(const FineOperators& ops, const Vec& reference, const Vec& approx) {
    if (reference.size() != approx.size()) throw std::invalid_argument("relative error: size mismatch");
    const Vec d = reference - approx;
    const double num2 = d.dot(ops.mass * d);
    const double den2 = reference.dot(ops.mass * reference);
    ErrorValue e;
    if (den2 > 0.0) {
        e.value = std::sqrt(std::max(num2, 0.0) / den2);
    } else {
        e.value = std::sqrt(std::max(num2, 0.0));
        e.absolute = true;
    }
    return e;
}

Vec reference_at_T(const Pipeline& p, int N) {
    const PararealConfig pc = p.cfg.parareal(N);
    const double dt = pc.time_grid().fine_dt();
    const int steps = step_count(dt, p.cfg.T);
    const Vec u0 = Vec::Zero(p.grid.interior_count());
    return reference_solve(p.ops, p.cfg.source, u0, dt, p.cfg.T, steps).states.back();
}

RunReport run_single(const Pipeline& p, int N) {
    RunReport r;
    const PararealConfig pc = p.cfg.parareal(N);
    stage("parareal", [&] { pc.validate(); return 0; });
    r.N = N;
    r.M = pc.substeps();
    r.fine_dt = pc.time_grid().fine_dt();
    r.gamma = p.angle.gamma;
    r.dt_max = p.stability.dt_max;
    if (r.fine_dt > r.dt_max)
        spdlog::warn("N = {}: fine step {:.3e} exceeds the explicit stability bound {:.3e}", N, r.fine_dt,
                     r.dt_max);

    const Propagators props = stage("propagators", [&] { return make_propagators(pc, p.space.mats, p.load); });
    const SplitState x0 = project_initial(Vec::Zero(p.grid.interior_count()), p.space, p.ops);

    const auto t0 = std::chrono::steady_clock::now();
    const PararealRun run = stage("parareal", [&] { return run_parareal(pc, *props.coarse, *props.fine, x0); });
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    r.iterations = run.iterations;
    r.converged = run.converged;
    r.max_diff = run.max_diff;
    r.times = run.times;
    r.wr_residuals = run.wr_residuals;
    r.fine_not_converged = static_cast<int>(run.fine_not_converged.size());

    r.reference = stage("reference", [&] { return reference_at_T(p, N); });
    for (std::size_t k = 1; k < run.iterates.size(); ++k) {
        const SplitState& s = run.iterates[k].back();
        r.error_history.push_back(relative_error(p.ops, r.reference, p.space.reconstruct(s.u, s.w)).value);
    }
    const SplitState& last = run.final_states().back();
    r.solution = p.space.reconstruct(last.u, last.w);
    r.error = relative_error(p.ops, r.reference, r.solution);
    return r;
}

std::string iterations_csv(std::vector<RunReport> reports, bool timings) {
    std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) { return a.N < b.N; });
    std::string out = "N,M,iterations,converged,relative_error,error_is_absolute,gamma,wall_time\n";
    for (const auto& r : reports) {
        out += std::to_string(r.N) + ',' + std::to_string(r.M) + ',' + std::to_string(r.iterations) + ',' +
               (r.converged ? "1" : "0") + ',' + num(r.error.value) + ',' + (r.error.absolute ? "1" : "0") + ',' +
               num(r.gamma) + ',' + (timings ? num(r.wall_time) : std::string()) + '\n';
    }
    return out;
}

std::string convergence_csv(const RunReport& r) {
    std::string out = "iteration,max_diff,relative_error\n";
    for (std::size_t k = 0; k < r.max_diff.size(); ++k)
        out += std::to_string(k + 1) + ',' + num(r.max_diff[k]) + ',' + num(r.error_history[k]) + '\n';
    return out;
}

std::string wr_residuals_csv(const RunReport& r) {
    std::string out = "iteration,interval,wr_iteration,residual\n";
    for (std::size_t k = 0; k < r.wr_residuals.size(); ++k)
        for (std::size_t n = 0; n < r.wr_residuals[k].size(); ++n)
            for (std::size_t j = 0; j < r.wr_residuals[k][n].size(); ++j)
                out += std::to_string(k + 1) + ',' + std::to_string(n) + ',' + std::to_string(j + 1) + ',' +
                       num(r.wr_residuals[k][n][j]) + '\n';
    return out;
}

std::string timings_csv(const RunReport& r) {
    std::string out = "iteration,coarse_seconds,fine_seconds,correction_seconds\n";
    for (std::size_t k = 0; k < r.times.size(); ++k)
        out += std::to_string(k) + ',' + num(r.times[k].coarse) + ',' + num(r.times[k].fine) + ',' +
               num(r.times[k].correction) + '\n';
    return out;
}

std::string summary_text(const Pipeline& p, const std::vector<RunReport>& reports) {
    std::ostringstream o;
    const auto& c = p.cfg;
    o << "fine grid          " << c.n << " x " << c.n << " cells, h = " << num(p.grid.h()) << "\n";
    o << "coarse grid        H = " << num(c.H) << ", oversampling layers = " << c.layers << "\n";
    o << "permeability       min " << num(p.field.min()) << ", max " << num(p.field.max()) << ", contrast "
      << num(p.field.contrast()) << ", channels " << c.channels.size() << "\n";
    o << "continua           fracture components (summed over blocks) " << p.continua.total_fractures() << "\n";
    o << "space              dim V_H1 = " << p.space.d1() << ", dim V_H2 = " << p.space.d2() << "\n";
    o << "constraint resid.  " << num(p.constraint_residual) << "\n";
    o << "mass asymmetry     " << num(p.space.max_asymmetry) << "\n";
    o << "subspace angle     gamma = " << num(p.angle.gamma) << (p.angle.degenerate ? " (one space empty)" : "")
      << "\n";
    o << "stability bound    dt_max = " << num(p.stability.dt_max) << " (lambda_max = " << num(p.stability.lambda_max)
      << ")\n";
    o << "time               T = " << num(c.T) << ", fine solver " << to_string(c.fine);
    if (c.fine == FineKind::AllAtOnce) o << ", alpha = " << num(c.alpha);
    o << ", eps = " << num(c.eps) << "\n";
    for (const auto& note : p.space.notes) o << "note               " << note << "\n";
    o << "\n    N    M  iterations  converged  relative_error          fine_dt                 "
         "fine_not_converged\n";
    for (const auto& r : reports) {
        char line[256];
        std::snprintf(line, sizeof line, "%5d %4d %11d %10s  %-22s  %-22s  %d\n", r.N, r.M, r.iterations,
                      r.converged ? "yes" : "no", (num(r.error.value) + (r.error.absolute ? " (abs)" : "")).c_str(),
                      num(r.fine_dt).c_str(), r.fine_not_converged);
        o << line;
    }
    return o.str();
}

Mat cell_grid(const FineGrid& grid, const std::vector<double>& values) {
    Mat m(grid.n, grid.n);
    for (int j = 0; j < grid.n; ++j)
        for (int i = 0; i < grid.n; ++i) m(j, i) = values[grid.cell_index(i, j)];
    return m;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult res;
    const Pipeline p = build_pipeline(cfg);
    spdlog::info("space ready: d1 = {}, d2 = {}, gamma = {:.6f}", p.space.d1(), p.space.d2(), p.angle.gamma);

    std::unique_ptr<OutputSet> out;
    try {
        out = std::make_unique<OutputSet>(cfg.output_dir);
    } catch (...) {
        rethrow_tagged("output");
    }

    auto write = [&](const std::string& name, const std::string& text) {
        try {
            out->write(name, text);
        } catch (...) {
            rethrow_tagged("output");
        }
    };
    auto write_matrix = [&](const std::string& name, const Mat& m) {
        try {
            out->write_matrix(name, m);
        } catch (...) {
            rethrow_tagged("output");
        }
    };

    std::vector<int> Ns = cfg.N_values;
    std::sort(Ns.begin(), Ns.end());
    Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
    for (int N : Ns) {
        RunReport r = run_single(p, N);
        spdlog::info("N = {}: {} iterations{}, relative error {:.4e}", N, r.iterations,
                     r.converged ? "" : " (not converged)", r.error.value);
        const std::string tag = "_N" + std::to_string(N);
        write("convergence" + tag + ".csv", convergence_csv(r));
        if (cfg.fine == FineKind::AllAtOnce) write("wr_residuals" + tag + ".csv", wr_residuals_csv(r));
        if (cfg.timings) write("timings" + tag + ".csv", timings_csv(r));
        if (cfg.export_solution) {
            write_matrix("solution" + tag + ".txt", to_nodal_grid(p.grid, r.solution));
            write_matrix("reference" + tag + ".txt", to_nodal_grid(p.grid, r.reference));
        }
        res.reports.push_back(std::move(r));
    }
    write("iterations.csv", iterations_csv(res.reports, cfg.timings));
    write("summary.txt", summary_text(p, res.reports));
    write("config.ini", to_ini(cfg));
    if (cfg.export_solution) {
        write_matrix("kappa.txt", cell_grid(p.grid, p.field.kappa));
        write_matrix("source.txt", cell_grid(p.grid, cfg.source.cell_values(p.grid)));
    }
    out->commit();
    for (const auto& f : out->files()) res.files.push_back(f.string());
    return res;
}

std::vector<std::string> export_basis(const ExperimentConfig& cfg, BasisKind kind, const std::string& dir) {
    stage("config", [&] { cfg.validate(); return 0; });
    const FineGrid grid = stage("grid", [&] { return build_fine_grid(cfg.n, cfg.n); });
    const auto field = stage("field", [&] { return generate_field(cfg.channels, cfg.background, cfg.contrast, grid); });
    const auto ops = stage("operators", [&] { return assemble_fine(grid, field); });
    const auto part = stage("partition", [&] { return build_coarse_partition(grid, cfg.H, cfg.layers); });
    const auto cont = stage("continua", [&] { return detect_continua(part, field); });

    std::vector<LocalBasis> bases;
    std::vector<double> residual;
    std::string eig;
    if (kind == BasisKind::Nlmc) {
        bases = stage("basis", [&] { return build_nlmc_bases(cont, part, ops, cfg.workers); });
        for (const auto& b : bases) residual.push_back(nlmc_constraint_residual(b, cont, part));
    } else {
        const CemSpace cs = stage("basis", [&] { return build_cem_space(part, field, ops, cont, CemWeight::KappaH2, 0,
                                                                        cfg.workers); });
        bases = cs.bases;
        for (const auto& b : bases) residual.push_back(cem_constraint_residual(b, cs.aux, part));
        eig = "block,index,eigenvalue\n";
        for (const auto& a : cs.aux)
            for (Eigen::Index j = 0; j < a.eigenvalues.size(); ++j)
                eig += std::to_string(a.block) + ',' + std::to_string(j) + ',' + num(a.eigenvalues[j]) + '\n';
    }

    int cols = 0;
    for (const auto& b : bases) cols += b.columns();
    Mat psi(grid.interior_count(), cols);
    std::string index = "column,block,continuum,constraint_residual\n";
    int c = 0;
    for (std::size_t i = 0; i < bases.size(); ++i)
        for (int k = 0; k < bases[i].columns(); ++k, ++c) {
            psi.col(c) = bases[i].global_column(k, grid.interior_count());
            index += std::to_string(c) + ',' + std::to_string(bases[i].block) + ',' +
                     std::to_string(bases[i].continuum[k]) + ',' + num(residual[i]) + '\n';
        }
    double asym = 0.0;
    const Mat empty(grid.interior_count(), 0);
    const CoarseMatrices m = stage("space", [&] { return project_coarse(psi, empty, ops, &asym); });

    try {
        OutputSet out(dir);
        const std::string prefix = kind == BasisKind::Nlmc ? "nlmc_" : "cem_";
        out.write(prefix + "columns.csv", index);
        out.write_matrix(prefix + "basis.txt", psi);
        out.write_matrix(prefix + "mass.txt", m.M11);
        out.write_matrix(prefix + "stiffness.txt", m.A11);
        if (!eig.empty()) out.write(prefix + "eigenvalues.csv", eig);
        out.commit();
        std::vector<std::string> files;
        for (const auto& f : out.files()) files.push_back(f.string());
        return files;
    } catch (...) {
        rethrow_tagged("output");
    }
}

namespace {

bool spd(const Mat& m) {
    if (m.rows() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
    return a.size() == b.size() &&
           (a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

}  // namespace

std::vector<CheckLine> run_checks(const ExperimentConfig& cfg) {
    std::vector<CheckLine> lines;
    const Pipeline p = build_pipeline(cfg);
    auto add = [&](std::string name, bool pass, std::string detail) {
        lines.push_back({std::move(name), pass, std::move(detail)});
    };

    add("nlmc_constraints", p.constraint_residual <= 1e-8, "max residual " + num(p.constraint_residual));
    add("mass_symmetry", p.space.max_asymmetry <= 1e-10, "max relative asymmetry " + num(p.space.max_asymmetry));
    add("M11_spd", spd(p.space.mats.M11), "d1 = " + std::to_string(p.space.d1()));
    add("M22_spd", spd(p.space.mats.M22), "d2 = " + std::to_string(p.space.d2()));
    add("gamma_range", p.angle.gamma >= 0.0 && p.angle.gamma < 1.0, "gamma = " + num(p.angle.gamma));
    for (int N : cfg.N_values) {
        const double dt = cfg.parareal(N).time_grid().fine_dt();
        add("fine_step_stable_N" + std::to_string(N), dt <= p.stability.dt_max,
            "fine dt " + num(dt) + " vs bound " + num(p.stability.dt_max));
    }

    // Same problem with a different worker count must give identical bits.
    ExperimentConfig alt = cfg;
    alt.workers = cfg.workers == 1 ? 4 : 1;
    const auto bases_alt = build_nlmc_bases(p.continua, p.partition, p.ops, alt.workers);
    bool same_basis = bases_alt.size() == p.bases.size();
    for (std::size_t i = 0; same_basis && i < p.bases.size(); ++i)
        same_basis = p.bases[i].values.size() == bases_alt[i].values.size() &&
                     std::memcmp(p.bases[i].values.data(), bases_alt[i].values.data(),
                                 sizeof(double) * p.bases[i].values.size()) == 0;
    add("basis_worker_determinism", same_basis,
        "workers " + std::to_string(cfg.workers) + " vs " + std::to_string(alt.workers));

    const int N = *std::min_element(cfg.N_values.begin(), cfg.N_values.end());
    PararealConfig a = cfg.parareal(N), b = alt.parareal(N);
    a.k_max = b.k_max = std::min(cfg.k_max, 3);
    const auto pa = make_propagators(a, p.space.mats, p.load);
    const auto pb = make_propagators(b, p.space.mats, p.load);
    const SplitState x0 = project_initial(Vec::Zero(p.grid.interior_count()), p.space, p.ops);
    const auto ra = run_parareal(a, *pa.coarse, *pa.fine, x0);
    const auto rb = run_parareal(b, *pb.coarse, *pb.fine, x0);
    bool same_run = ra.iterates.size() == rb.iterates.size();
    for (std::size_t k = 0; same_run && k < ra.iterates.size(); ++k)
        for (std::size_t n = 0; same_run && n < ra.iterates[k].size(); ++n)
            same_run = bitwise_equal(ra.iterates[k][n].u, rb.iterates[k][n].u) &&
                       bitwise_equal(ra.iterates[k][n].w, rb.iterates[k][n].w);
    add("parareal_worker_determinism", same_run,
        "N = " + std::to_string(N) + ", " + std::to_string(a.k_max) + " iterations, workers " +
            std::to_string(a.workers) + " vs " + std::to_string(b.workers));
    return lines;
}

}  // namespace mspint
