#include "mspint/cem.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>

namespace mspint {

std::vector<double> cem_weight(const CoarsePartition& partition, const PermeabilityField& field,
                               CemWeight kind) {
    const FineGrid& g = partition.grid;
    const double H = partition.H();
    std::vector<double> w(g.cell_count());
    for (int cj = 0; cj < g.n; ++cj)
        for (int ci = 0; ci < g.n; ++ci) {
            const int c = g.cell_index(ci, cj);
            if (kind == CemWeight::KappaH2) {
                w[c] = field.kappa[c] / (H * H);
                continue;
            }
            // Local coordinates of the cell centre inside its coarse block.
            const int cpb = partition.cells_per_block;
            const double xi = ((ci % cpb) + 0.5) / cpb;
            const double eta = ((cj % cpb) + 0.5) / cpb;
            const double gx = 2.0 * ((1 - eta) * (1 - eta) + eta * eta);
            const double gy = 2.0 * ((1 - xi) * (1 - xi) + xi * xi);
            w[c] = field.kappa[c] * (gx + gy) / (H * H);
        }
    return w;
}

AuxBlock aux_eigen_cem(int block, const CoarsePartition& partition, const PermeabilityField& field,
                       const std::vector<double>& weight, int count) {
    const FineGrid& g = partition.grid;
    const CellRect r = partition.block(block);
    const int w = r.width() + 1;

    AuxBlock ab;
    ab.block = block;
    std::vector<int> local(static_cast<std::size_t>(w) * (r.height() + 1), -1);
    for (int j = r.y0; j <= r.y1; ++j)
        for (int i = r.x0; i <= r.x1; ++i) {
            const int gi = g.interior_index(i, j);
            if (gi < 0) continue;
            local[(i - r.x0) + (j - r.y0) * w] = static_cast<int>(ab.interior.size());
            ab.interior.push_back(gi);
        }
    const int n = static_cast<int>(ab.interior.size());
    ab.stiffness = Mat::Zero(n, n);
    ab.weighted_mass = Mat::Zero(n, n);
    const Eigen::Matrix4d ke = q1_stiffness();
    const Eigen::Matrix4d me = q1_mass(g.h());
    for (int cj = r.y0; cj < r.y1; ++cj)
        for (int ci = r.x0; ci < r.x1; ++ci) {
            const int c = g.cell_index(ci, cj);
            const int corner[4][2] = {{ci, cj}, {ci + 1, cj}, {ci + 1, cj + 1}, {ci, cj + 1}};
            std::array<int, 4> idx;
            for (int a = 0; a < 4; ++a)
                idx[a] = local[(corner[a][0] - r.x0) + (corner[a][1] - r.y0) * w];
            for (int a = 0; a < 4; ++a) {
                if (idx[a] < 0) continue;
                for (int b = 0; b < 4; ++b) {
                    if (idx[b] < 0) continue;
                    ab.stiffness(idx[a], idx[b]) += field.kappa[c] * ke(a, b);
                    ab.weighted_mass(idx[a], idx[b]) += weight[c] * me(a, b);
                }
            }
        }

    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(ab.stiffness, ab.weighted_mass);
    if (es.info() != Eigen::Success)
        throw NumericalError("auxiliary eigenproblem failed in block " + std::to_string(block));
    const int J = std::clamp(count, 1, n);
    ab.eigenvalues = es.eigenvalues().head(J);
    ab.eigenvectors = es.eigenvectors().leftCols(J);
    return ab;
}

namespace {

// Rows s(., psi_k^l) restricted to the unknowns of `nodes`, for every auxiliary
// function of every block inside the oversampled region.
SpMat aux_constraints(const std::vector<AuxBlock>& aux, const std::vector<int>& blocks,
                      const LocalNodes& nodes, int interior_count,
                      std::vector<std::pair<int, int>>& labels) {
    std::vector<int> to_local(interior_count, -1);
    for (int k = 0; k < nodes.size(); ++k) to_local[nodes.global[k]] = k;
    std::vector<Triplet> trip;
    int row = 0;
    for (int l : blocks) {
        const AuxBlock& ab = aux[l];
        const Mat sv = ab.weighted_mass * ab.eigenvectors;
        for (int k = 0; k < sv.cols(); ++k, ++row) {
            labels.emplace_back(l, k);
            for (int a = 0; a < sv.rows(); ++a) {
                const int loc = to_local[ab.interior[a]];
                if (loc >= 0) trip.emplace_back(row, loc, sv(a, k));
            }
        }
    }
    SpMat c(row, nodes.size());
    c.setFromTriplets(trip.begin(), trip.end());
    return c;
}

}  // namespace

LocalBasis build_cem_basis(int block, const std::vector<AuxBlock>& aux,
                           const CoarsePartition& partition, const FineOperators& ops) {
    LocalBasis lb;
    lb.block = block;
    lb.nodes = local_nodes(partition.grid, partition.oversampled(block));
    std::vector<std::pair<int, int>> labels;
    const SpMat c = aux_constraints(aux, partition.blocks_in_oversampled(block), lb.nodes,
                                    partition.grid.interior_count(), labels);
    const int J = static_cast<int>(aux[block].eigenvalues.size());
    Mat targets = Mat::Zero(c.rows(), J);
    for (int r = 0; r < static_cast<int>(labels.size()); ++r)
        if (labels[r].first == block) targets(r, labels[r].second) = 1.0;
    for (int j = 0; j < J; ++j) lb.continuum.push_back(j);
    try {
        ConstrainedMinimizer solver(restrict_matrix(ops.stiffness, lb.nodes), c);
        lb.values = solver.solve(targets);
    } catch (const NumericalError& e) {
        throw NumericalError("CEM basis, block " + std::to_string(block) + ": " + e.what());
    }
    return lb;
}

double cem_constraint_residual(const LocalBasis& basis, const std::vector<AuxBlock>& aux,
                               const CoarsePartition& partition) {
    const int ni = partition.grid.interior_count();
    double worst = 0.0;
    for (int k = 0; k < basis.columns(); ++k) {
        const Vec phi = basis.global_column(k, ni);
        for (int l : partition.blocks_in_oversampled(basis.block)) {
            const AuxBlock& ab = aux[l];
            Vec phi_l(ab.interior.size());
            for (std::size_t a = 0; a < ab.interior.size(); ++a) phi_l[a] = phi[ab.interior[a]];
            const Vec s = ab.eigenvectors.transpose() * (ab.weighted_mass * phi_l);
            for (int q = 0; q < s.size(); ++q) {
                const double expect = (l == basis.block && q == basis.continuum[k]) ? 1.0 : 0.0;
                worst = std::max(worst, std::abs(s[q] - expect));
            }
        }
    }
    return worst;
}

CemSpace build_cem_space(const CoarsePartition& partition, const PermeabilityField& field,
                         const FineOperators& ops, const ContinuumDecomposition& continua,
                         CemWeight weight, int count_per_block, int workers) {
    const int nb = partition.block_count();
    const auto w = cem_weight(partition, field, weight);
    CemSpace space;
    space.aux.resize(nb);
    space.bases.resize(nb);
    std::exception_ptr failure;
    workers = std::max(1, workers);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int b = 0; b < nb; ++b) {
        try {
            const int J = count_per_block > 0 ? count_per_block
                                              : continua.blocks[b].fracture_count() + 1;
            space.aux[b] = aux_eigen_cem(b, partition, field, w, J);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int b = 0; b < nb; ++b) {
        try {
            space.bases[b] = build_cem_basis(b, space.aux, partition, ops);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return space;
}

}  // namespace mspint
