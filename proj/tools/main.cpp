// Command line driver: run | solve | basis | check.

#include "mspint/experiment.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>

using namespace mspint;

namespace {

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    bool quiet = false;
    int N = 0;
    std::string basis = "nlmc";
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("-c,--config", o.config, "experiment INI file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-s,--set", o.overrides, "override a config key, e.g. --set time.N=50");
    cmd->add_flag("-q,--quiet", o.quiet, "only warnings and errors on stderr");
}

ExperimentConfig load(const Options& o) {
    try {
        ExperimentConfig cfg = load_config(o.config, o.overrides);
        if (!o.out.empty()) cfg.output_dir = o.out;
        return cfg;
    } catch (...) {
        rethrow_tagged("config");
    }
}

int run(const ExperimentConfig& cfg) {
    const ExperimentResult r = run_experiment(cfg);
    std::printf("    N  iterations  converged  relative_error\n");
    for (const auto& rep : r.reports)
        std::printf("%5d %11d %10s  %.6e\n", rep.N, rep.iterations, rep.converged ? "yes" : "no", rep.error.value);
    std::printf("%zu files written to %s\n", r.files.size(), cfg.output_dir.c_str());
    return 0;
}

int solve(const Options& o) {
    ExperimentConfig cfg = load(o);
    if (o.N > 0) cfg.N_values = {o.N};
    cfg.N_values.resize(1);
    return run(cfg);
}

int basis(const Options& o) {
    const ExperimentConfig cfg = load(o);
    const BasisKind kind = o.basis == "cem" ? BasisKind::Cem : BasisKind::Nlmc;
    const auto files = export_basis(cfg, kind, o.out.empty() ? cfg.output_dir : o.out);
    for (const auto& f : files) std::printf("%s\n", f.c_str());
    return 0;
}

int check(const Options& o) {
    const auto lines = run_checks(load(o));
    bool ok = true;
    for (const auto& l : lines) {
        std::printf("%s %s (%s)\n", l.pass ? "PASS" : "FAIL", l.name.c_str(), l.detail.c_str());
        ok = ok && l.pass;
    }
    return ok ? 0 : static_cast<int>(FailureClass::Check);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parareal with partially explicit multiscale splitting for high-contrast diffusion"};
    app.require_subcommand(1);
    Options o;

    auto* run_cmd = app.add_subcommand("run", "run every N of the config and write all artifacts");
    add_common(run_cmd, o);
    run_cmd->add_option("-o,--out", o.out, "output directory (overrides output.dir)");

    auto* solve_cmd = app.add_subcommand("solve", "single parareal run");
    add_common(solve_cmd, o);
    solve_cmd->add_option("-N,--intervals", o.N, "coarse interval count (default: first N of the config)")
        ->check(CLI::PositiveNumber);
    solve_cmd->add_option("-o,--out", o.out, "output directory (overrides output.dir)");

    auto* basis_cmd = app.add_subcommand("basis", "build a multiscale basis and export it");
    add_common(basis_cmd, o);
    basis_cmd->add_option("-k,--kind", o.basis, "nlmc or cem")->check(CLI::IsMember({"nlmc", "cem"}));
    basis_cmd->add_option("-o,--out", o.out, "output directory (overrides output.dir)");

    auto* check_cmd = app.add_subcommand("check", "structural invariant suite");
    add_common(check_cmd, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(FailureClass::Usage);
    }
    spdlog::set_default_logger(spdlog::stderr_color_mt("mspint"));
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(o.quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*run_cmd) return run(load(o));
        if (*solve_cmd) return solve(o);
        if (*basis_cmd) return basis(o);
        if (*check_cmd) return check(o);
    } catch (const StageError& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(FailureClass::Numerical);
    }
    return 0;
}
