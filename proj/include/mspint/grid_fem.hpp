#pragma once

#include "mspint/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace mspint {

/// Uniform square grid of n x n cells on [0,1]^2 with bilinear (Q1) elements.
///
/// Nodes are indexed (i, j) with i along x and j along y, 0 <= i, j <= n.
/// Boundary nodes carry the zero Dirichlet value and never enter a solve;
/// interior nodes are numbered row-major: (j-1)*(n-1) + (i-1).
struct FineGrid {
    int n = 0;

    double h() const { return 1.0 / n; }
    int nodes_per_axis() const { return n + 1; }
    int cell_count() const { return n * n; }
    int interior_count() const { return (n - 1) * (n - 1); }
    int cell_index(int ci, int cj) const { return cj * n + ci; }

    bool is_interior(int i, int j) const { return i > 0 && j > 0 && i < n && j < n; }
    /// -1 for boundary nodes.
    int interior_index(int i, int j) const {
        return is_interior(i, j) ? (j - 1) * (n - 1) + (i - 1) : -1;
    }
};

FineGrid build_fine_grid(int nx, int ny);

/// Axis-aligned strip in cell units, half-open: cells [x0,x1) x [y0,y1).
struct Channel {
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};

/// Cell-wise conductivity with a channel/matrix classification.
struct PermeabilityField {
    FineGrid grid;
    std::vector<double> kappa;          // per cell, cell_index order
    std::vector<std::uint8_t> channel;  // 1 where kappa > threshold
    std::vector<Channel> channels;
    double threshold = 0.0;

    double min() const;
    double max() const;
    double contrast() const { return max() / min(); }

    /// Wraps arbitrary positive cell values; threshold is the geometric mean of min and max.
    static PermeabilityField from_values(const FineGrid& grid, std::vector<double> values);
};

PermeabilityField generate_field(const std::vector<Channel>& channels, double background,
                                 double contrast, const FineGrid& grid);

enum class SourceKind { Constant, Box, Cell };

/// f(x, t) = amplitude * indicator(x) * (1 + time_rate * t); piecewise constant per cell.
struct SourceSpec {
    SourceKind kind = SourceKind::Constant;
    double amplitude = 1.0;
    // Box region in physical coordinates; a cell belongs to it when its centre does.
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    // Point-like source: the single cell containing (px, py).
    double px = 0.5, py = 0.5;
    double time_rate = 0.0;

    void validate() const;
    double time_factor(double t) const { return 1.0 + time_rate * t; }
    /// Spatial part per cell (time factor excluded).
    std::vector<double> cell_values(const FineGrid& grid) const;
};

/// Mass and stiffness on interior nodes (Dirichlet rows/cols eliminated).
struct FineOperators {
    FineGrid grid;
    SpMat mass;
    SpMat stiffness;
};

/// Q1 element matrices on a square cell; node order (0,0),(1,0),(1,1),(0,1).
Eigen::Matrix4d q1_stiffness();          // for unit conductivity; size-independent in 2-D
Eigen::Matrix4d q1_mass(double h);

/// Global node ids (i + j*(n+1)) of a cell's four corners in element order.
std::array<int, 4> cell_nodes(const FineGrid& grid, int ci, int cj);

FineOperators assemble_fine(const FineGrid& grid, const PermeabilityField& field);

/// Cell-weighted mass matrix on interior nodes: sum_c w_c * int_c phi_i phi_j.
SpMat assemble_weighted_mass(const FineGrid& grid, const std::vector<double>& cell_weight);

/// Full (n+1)^2 matrices before boundary elimination; used for checks and exports.
SpMat assemble_full_mass(const FineGrid& grid);
SpMat assemble_full_stiffness(const FineGrid& grid, const PermeabilityField& field);

/// Consistent load (f(., t), phi_i) on interior nodes.
Vec assemble_load(const FineGrid& grid, const SourceSpec& source, double t);

struct FineTrajectory {
    std::vector<double> times;
    std::vector<Vec> states;
};

/// Backward Euler on the fine space: (M/dt + A) u^{n+1} = M u^n / dt + b(t_{n+1}).
/// Stores every `store_every`-th step plus the initial and final states.
FineTrajectory reference_solve(const FineOperators& ops, const SourceSpec& source,
                               const Vec& u0, double dt, double T, int store_every = 1);

/// a(u,u) on interior nodal vectors.
double energy(const FineOperators& ops, const Vec& u);

/// Interior vector -> (n+1) x (n+1) nodal grid (row = y line) with zero boundary.
Mat to_nodal_grid(const FineGrid& grid, const Vec& interior);

/// Number of time steps of size dt in [0, T]; throws unless dt divides T.
int step_count(double dt, double T);

}  // namespace mspint
