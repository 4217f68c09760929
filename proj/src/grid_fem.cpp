#include "mspint/grid_fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mspint {

FineGrid build_fine_grid(int nx, int ny) {
    if (nx != ny) {
        std::ostringstream os;
        os << "fine grid must be square (nx == ny), got " << nx << " x " << ny;
        throw std::invalid_argument(os.str());
    }
    if (nx < 2) throw std::invalid_argument("fine grid needs at least 2 cells per axis");
    return FineGrid{nx};
}

double PermeabilityField::min() const { return *std::min_element(kappa.begin(), kappa.end()); }
double PermeabilityField::max() const { return *std::max_element(kappa.begin(), kappa.end()); }

PermeabilityField PermeabilityField::from_values(const FineGrid& grid, std::vector<double> values) {
    if (static_cast<int>(values.size()) != grid.cell_count())
        throw std::invalid_argument("permeability: value count does not match the grid");
    for (double v : values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("permeability must be positive and finite everywhere");
    PermeabilityField f;
    f.grid = grid;
    f.kappa = std::move(values);
    f.threshold = std::sqrt(f.min() * f.max());
    f.channel.resize(f.kappa.size());
    for (std::size_t c = 0; c < f.kappa.size(); ++c) f.channel[c] = f.kappa[c] > f.threshold;
    return f;
}

PermeabilityField generate_field(const std::vector<Channel>& channels, double background,
                                 double contrast, const FineGrid& grid) {
    if (!(background > 0.0)) throw std::invalid_argument("field background must be positive");
    if (!(contrast >= 1.0)) throw std::invalid_argument("field contrast must be >= 1");
    std::vector<double> kappa(grid.cell_count(), background);
    for (const auto& ch : channels) {
        if (ch.x0 < 0 || ch.y0 < 0 || ch.x1 > grid.n || ch.y1 > grid.n || ch.x0 >= ch.x1 ||
            ch.y0 >= ch.y1) {
            std::ostringstream os;
            os << "channel [" << ch.x0 << "," << ch.x1 << ")x[" << ch.y0 << "," << ch.y1
               << ") is empty or outside the " << grid.n << "x" << grid.n << " grid";
            throw std::invalid_argument(os.str());
        }
        for (int j = ch.y0; j < ch.y1; ++j)
            for (int i = ch.x0; i < ch.x1; ++i) kappa[grid.cell_index(i, j)] = background * contrast;
    }
    PermeabilityField f;
    f.grid = grid;
    f.kappa = std::move(kappa);
    f.channels = channels;
    f.threshold = background * std::sqrt(contrast);
    f.channel.resize(f.kappa.size());
    for (std::size_t c = 0; c < f.kappa.size(); ++c) f.channel[c] = f.kappa[c] > f.threshold;
    return f;
}

void SourceSpec::validate() const {
    if (!std::isfinite(amplitude)) throw std::invalid_argument("source amplitude must be finite");
    if (!std::isfinite(time_rate)) throw std::invalid_argument("source time rate must be finite");
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (kind == SourceKind::Box &&
        !(in_unit(x0) && in_unit(x1) && in_unit(y0) && in_unit(y1) && x0 < x1 && y0 < y1))
        throw std::invalid_argument("source box must be a non-empty subset of [0,1]^2");
    if (kind == SourceKind::Cell && !(in_unit(px) && in_unit(py)))
        throw std::invalid_argument("point source location must lie in [0,1]^2");
}

std::vector<double> SourceSpec::cell_values(const FineGrid& grid) const {
    validate();
    std::vector<double> f(grid.cell_count(), 0.0);
    const double h = grid.h();
    switch (kind) {
        case SourceKind::Constant:
            std::fill(f.begin(), f.end(), amplitude);
            break;
        case SourceKind::Box:
            for (int j = 0; j < grid.n; ++j)
                for (int i = 0; i < grid.n; ++i) {
                    const double xc = (i + 0.5) * h, yc = (j + 0.5) * h;
                    if (xc >= x0 && xc <= x1 && yc >= y0 && yc <= y1)
                        f[grid.cell_index(i, j)] = amplitude;
                }
            break;
        case SourceKind::Cell: {
            const int ci = std::min(static_cast<int>(px / h), grid.n - 1);
            const int cj = std::min(static_cast<int>(py / h), grid.n - 1);
            f[grid.cell_index(ci, cj)] = amplitude;
            break;
        }
    }
    return f;
}

Eigen::Matrix4d q1_stiffness() {
    Eigen::Matrix4d k;
    k << 4, -1, -2, -1,
        -1, 4, -1, -2,
        -2, -1, 4, -1,
        -1, -2, -1, 4;
    return k / 6.0;
}

Eigen::Matrix4d q1_mass(double h) {
    Eigen::Matrix4d m;
    m << 4, 2, 1, 2,
         2, 4, 2, 1,
         1, 2, 4, 2,
         2, 1, 2, 4;
    return m * (h * h / 36.0);
}

std::array<int, 4> cell_nodes(const FineGrid& grid, int ci, int cj) {
    const int np = grid.nodes_per_axis();
    return {ci + cj * np, ci + 1 + cj * np, ci + 1 + (cj + 1) * np, ci + (cj + 1) * np};
}

namespace {

// Sum of cell-weighted element matrices; `interior_only` drops Dirichlet rows/cols.
SpMat assemble(const FineGrid& grid, const std::vector<double>& weight, const Eigen::Matrix4d& ke,
               bool interior_only) {
    const int np = grid.nodes_per_axis();
    std::vector<Triplet> trip;
    trip.reserve(16 * grid.cell_count());
    for (int cj = 0; cj < grid.n; ++cj)
        for (int ci = 0; ci < grid.n; ++ci) {
            const double w = weight[grid.cell_index(ci, cj)];
            const auto nodes = cell_nodes(grid, ci, cj);
            std::array<int, 4> idx;
            for (int a = 0; a < 4; ++a) {
                const int i = nodes[a] % np, j = nodes[a] / np;
                idx[a] = interior_only ? grid.interior_index(i, j) : nodes[a];
            }
            for (int a = 0; a < 4; ++a) {
                if (idx[a] < 0) continue;
                for (int b = 0; b < 4; ++b) {
                    if (idx[b] < 0) continue;
                    trip.emplace_back(idx[a], idx[b], w * ke(a, b));
                }
            }
        }
    const int dim = interior_only ? grid.interior_count() : np * np;
    SpMat m(dim, dim);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

void check_kappa(const FineGrid& grid, const PermeabilityField& field) {
    if (static_cast<int>(field.kappa.size()) != grid.cell_count())
        throw std::invalid_argument("permeability field does not cover the grid");
    for (double k : field.kappa)
        if (!(k > 0.0)) throw std::invalid_argument("nonpositive permeability");
}

}  // namespace

FineOperators assemble_fine(const FineGrid& grid, const PermeabilityField& field) {
    check_kappa(grid, field);
    const std::vector<double> ones(grid.cell_count(), 1.0);
    FineOperators ops;
    ops.grid = grid;
    ops.mass = assemble(grid, ones, q1_mass(grid.h()), true);
    ops.stiffness = assemble(grid, field.kappa, q1_stiffness(), true);
    return ops;
}

SpMat assemble_weighted_mass(const FineGrid& grid, const std::vector<double>& cell_weight) {
    return assemble(grid, cell_weight, q1_mass(grid.h()), true);
}

SpMat assemble_full_mass(const FineGrid& grid) {
    return assemble(grid, std::vector<double>(grid.cell_count(), 1.0), q1_mass(grid.h()), false);
}

SpMat assemble_full_stiffness(const FineGrid& grid, const PermeabilityField& field) {
    check_kappa(grid, field);
    return assemble(grid, field.kappa, q1_stiffness(), false);
}

Vec assemble_load(const FineGrid& grid, const SourceSpec& source, double t) {
    const auto f = source.cell_values(grid);
    const double g = source.time_factor(t);
    const double quarter = grid.h() * grid.h() / 4.0;  // int_cell phi_a for every Q1 corner
    Vec b = Vec::Zero(grid.interior_count());
    for (int cj = 0; cj < grid.n; ++cj)
        for (int ci = 0; ci < grid.n; ++ci) {
            const double fc = f[grid.cell_index(ci, cj)];
            if (fc == 0.0) continue;
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di) {
                    const int k = grid.interior_index(ci + di, cj + dj);
                    if (k >= 0) b[k] += g * fc * quarter;
                }
        }
    return b;
}

int step_count(double dt, double T) {
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("time step and horizon must be positive");
    const double r = T / dt;
    const long steps = std::lround(r);
    if (steps < 1 || std::abs(r - static_cast<double>(steps)) > 1e-9 * std::max(1.0, r))
        throw std::invalid_argument("time step does not divide the horizon");
    return static_cast<int>(steps);
}

FineTrajectory reference_solve(const FineOperators& ops, const SourceSpec& source, const Vec& u0,
                               double dt, double T, int store_every) {
    const int steps = step_count(dt, T);
    if (u0.size() != ops.mass.rows()) throw std::invalid_argument("initial state has wrong size");
    store_every = std::max(1, store_every);

    const SpMat mdt = ops.mass / dt;
    const SpMat lhs = mdt + ops.stiffness;
    Eigen::SimplicialLDLT<SpMat> solver(lhs);
    if (solver.info() != Eigen::Success)
        throw NumericalError("reference solve: factorization of M/dt + A failed");

    // time_factor(0) == 1, so this is the spatial part of the load.
    const Vec b0 = assemble_load(ops.grid, source, 0.0);

    FineTrajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(u0);
    Vec u = u0;
    for (int s = 1; s <= steps; ++s) {
        const double t = s * dt;
        Vec rhs = mdt * u + source.time_factor(t) * b0;
        u = solver.solve(rhs);
        if (solver.info() != Eigen::Success)
            throw NumericalError("reference solve: back substitution failed at step " + std::to_string(s));
        if (s % store_every == 0 || s == steps) {
            traj.times.push_back(t);
            traj.states.push_back(u);
        }
    }
    return traj;
}

double energy(const FineOperators& ops, const Vec& u) { return u.dot(ops.stiffness * u); }

Mat to_nodal_grid(const FineGrid& grid, const Vec& interior) {
    const int np = grid.nodes_per_axis();
    Mat out = Mat::Zero(np, np);
    for (int j = 1; j < grid.n; ++j)
        for (int i = 1; i < grid.n; ++i) out(j, i) = interior[grid.interior_index(i, j)];
    return out;
}

}  // namespace mspint
