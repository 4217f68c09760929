#include "mspint/parareal.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <exception>

namespace mspint {

FineKind parse_fine_kind(const std::string& s) {
    if (s == "sequential") return FineKind::Sequential;
    if (s == "allatonce" || s == "all-at-once") return FineKind::AllAtOnce;
    throw std::invalid_argument("unknown fine solver kind '" + s + "' (sequential | allatonce)");
}

std::string to_string(FineKind k) { return k == FineKind::Sequential ? "sequential" : "allatonce"; }

void PararealConfig::validate() const {
    time_grid().validate();
    if (!(eps > 0.0)) throw std::invalid_argument("parareal tolerance must be positive");
    if (k_max < 1) throw std::invalid_argument("parareal needs k_max >= 1");
    if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
    if (fine == FineKind::AllAtOnce) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
        if (!(wr_tol > 0.0) || wr_max_iter < 1) throw std::invalid_argument("invalid WR settings");
    }
}

Propagators make_propagators(const PararealConfig& cfg, const CoarseMatrices& mats,
                             const CoarseLoad& load) {
    const TimeGrid tg = cfg.time_grid();
    Propagators p;
    p.coarse = std::make_unique<CoarseStep>(mats, load, tg.coarse_dt());
    if (cfg.fine == FineKind::Sequential)
        p.fine = std::make_unique<SequentialSplitting>(mats, load, tg.coarse_dt(), tg.M);
    else
        p.fine = std::make_unique<WaveformRelaxation>(mats, load, tg.coarse_dt(), tg.M, cfg.alpha,
                                                      cfg.wr_tol, cfg.wr_max_iter, 1);
    return p;
}

std::vector<SplitState> initial_sweep(const IntervalPropagator& coarse, const SplitState& x0, int N) {
    std::vector<SplitState> x;
    x.reserve(N + 1);
    x.push_back(x0);
    for (int n = 0; n < N; ++n) x.push_back(coarse.propagate(x[n]).state);
    return x;
}

std::vector<PropagationResult> fine_sweep(const IntervalPropagator& fine,
                                          const std::vector<SplitState>& states, int workers) {
    const int N = static_cast<int>(states.size()) - 1;
    std::vector<PropagationResult> out(N);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (int n = 0; n < N; ++n) {
        try {
            out[n] = fine.propagate(states[n]);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<SplitState> correction_sweep(const IntervalPropagator& coarse,
                                         const std::vector<PropagationResult>& fine,
                                         const SplitState& x0, std::vector<SplitState>& coarse_old) {
    const int N = static_cast<int>(fine.size());
    std::vector<SplitState> x;
    x.reserve(N + 1);
    x.push_back(x0);
    for (int n = 0; n < N; ++n) {
        SplitState g_new = coarse.propagate(x[n]).state;
        const SplitState& g_old = coarse_old[n];
        const SplitState& f = fine[n].state;
        x.push_back(SplitState::at_rest(f.u + (g_new.u - g_old.u), f.w + (g_new.w - g_old.w), g_new.t));
        coarse_old[n] = std::move(g_new);
    }
    return x;
}

StopCheck check_stop(const std::vector<SplitState>& current, const std::vector<SplitState>& previous,
                     double eps) {
    if (current.size() != previous.size()) throw std::invalid_argument("iterates differ in length");
    StopCheck sc;
    for (std::size_t n = 1; n < current.size(); ++n) {
        const double du = (current[n].u - previous[n].u).squaredNorm();
        const double dw = (current[n].w - previous[n].w).squaredNorm();
        sc.max_diff = std::max(sc.max_diff, std::sqrt(du + dw));
    }
    sc.stop = sc.max_diff < eps;
    return sc;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

PararealRun run_parareal(const PararealConfig& cfg, const IntervalPropagator& coarse,
                         const IntervalPropagator& fine, const SplitState& x0) {
    cfg.validate();
    PararealRun run;
    auto clock = std::chrono::steady_clock::now();
    run.iterates.push_back(initial_sweep(coarse, x0, cfg.N));
    run.times.push_back({seconds_since(clock), 0.0, 0.0});

    std::vector<SplitState> coarse_old(run.iterates[0].begin() + 1, run.iterates[0].end());
    for (int k = 1; k <= cfg.k_max; ++k) {
        PhaseTimes pt;
        clock = std::chrono::steady_clock::now();
        const auto fine_out = fine_sweep(fine, run.iterates.back(), cfg.workers);
        pt.fine = seconds_since(clock);

        std::vector<std::vector<double>> wr(cfg.N);
        for (int n = 0; n < cfg.N; ++n) {
            wr[n] = fine_out[n].residuals;
            if (!fine_out[n].converged) run.fine_not_converged.emplace_back(k, n);
        }
        run.wr_residuals.push_back(std::move(wr));

        clock = std::chrono::steady_clock::now();
        auto next = correction_sweep(coarse, fine_out, x0, coarse_old);
        pt.correction = seconds_since(clock);
        run.times.push_back(pt);

        const StopCheck sc = check_stop(next, run.iterates.back(), cfg.eps);
        run.iterates.push_back(std::move(next));
        run.max_diff.push_back(sc.max_diff);
        run.iterations = k;
        if (sc.stop) {
            run.converged = true;
            break;
        }
    }
    return run;
}

std::vector<SplitState> sequential_fine(const IntervalPropagator& fine, const SplitState& x0, int N) {
    std::vector<SplitState> x;
    x.reserve(N + 1);
    x.push_back(x0);
    for (int n = 0; n < N; ++n) {
        SplitState s = fine.propagate(x[n]).state;
        s.reset_lags();
        x.push_back(std::move(s));
    }
    return x;
}

}  // namespace mspint
