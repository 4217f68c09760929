#include "mspint/nlmc.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>

namespace mspint {

Vec LocalBasis::global_column(int k, int interior_count) const {
    Vec v = Vec::Zero(interior_count);
    for (int a = 0; a < nodes.size(); ++a) v[nodes.global[a]] = values(a, k);
    return v;
}

namespace {

struct ConstraintSet {
    int block;
    int continuum;  // 0 matrix, k fracture
    const std::vector<int>* cells;
};

std::vector<ConstraintSet> constraint_sets(int block, const ContinuumDecomposition& continua,
                                           const CoarsePartition& partition,
                                           std::vector<std::string>* notes) {
    std::vector<ConstraintSet> sets;
    for (int j : partition.blocks_in_oversampled(block)) {
        const BlockContinua& bc = continua.blocks[j];
        if (!bc.matrix_cells.empty())
            sets.push_back({j, 0, &bc.matrix_cells});
        else if (notes)
            notes->push_back("block " + std::to_string(j) +
                             ": empty matrix region, average constraint dropped");
        for (int k = 0; k < bc.fracture_count(); ++k) sets.push_back({j, k + 1, &bc.fractures[k]});
    }
    return sets;
}

}  // namespace

LocalBasis build_nlmc_basis(int block, const ContinuumDecomposition& continua,
                            const CoarsePartition& partition, const FineOperators& ops) {
    if (block < 0 || block >= partition.block_count())
        throw std::out_of_range("block index out of range");
    LocalBasis lb;
    lb.block = block;
    lb.nodes = local_nodes(partition.grid, partition.oversampled(block));

    const auto sets = constraint_sets(block, continua, partition, &lb.notes);
    SpMat c(static_cast<int>(sets.size()), lb.nodes.size());
    {
        std::vector<Triplet> trip;
        for (int r = 0; r < static_cast<int>(sets.size()); ++r) {
            const auto row = cell_integral_row(partition.grid, lb.nodes, *sets[r].cells);
            for (Eigen::SparseVector<double>::InnerIterator it(row); it; ++it)
                trip.emplace_back(r, it.index(), it.value());
        }
        c.setFromTriplets(trip.begin(), trip.end());
    }

    // One column per continuum of this block, in constraint order (matrix first).
    std::vector<int> own_rows;
    for (int r = 0; r < static_cast<int>(sets.size()); ++r)
        if (sets[r].block == block) {
            own_rows.push_back(r);
            lb.continuum.push_back(sets[r].continuum);
        }
    Mat targets = Mat::Zero(static_cast<int>(sets.size()), static_cast<int>(own_rows.size()));
    for (int k = 0; k < static_cast<int>(own_rows.size()); ++k) targets(own_rows[k], k) = 1.0;

    try {
        ConstrainedMinimizer solver(restrict_matrix(ops.stiffness, lb.nodes), c);
        lb.values = solver.solve(targets);
    } catch (const NumericalError& e) {
        throw NumericalError("NLMC basis, block " + std::to_string(block) + ": " + e.what());
    }
    return lb;
}

std::vector<LocalBasis> build_nlmc_bases(const ContinuumDecomposition& continua,
                                         const CoarsePartition& partition,
                                         const FineOperators& ops, int workers) {
    const int nb = partition.block_count();
    std::vector<LocalBasis> out(nb);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (int b = 0; b < nb; ++b) {
        try {
            out[b] = build_nlmc_basis(b, continua, partition, ops);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

double nlmc_constraint_residual(const LocalBasis& basis, const ContinuumDecomposition& continua,
                                const CoarsePartition& partition) {
    const FineGrid& g = partition.grid;
    const double quarter = g.h() * g.h() / 4.0;
    const auto sets = constraint_sets(basis.block, continua, partition, nullptr);
    double worst = 0.0;
    for (int k = 0; k < basis.columns(); ++k) {
        const Vec col = basis.global_column(k, g.interior_count());
        for (const auto& s : sets) {
            double integral = 0.0;
            for (int c : *s.cells) {
                const int ci = c % g.n, cj = c / g.n;
                for (int dj = 0; dj < 2; ++dj)
                    for (int di = 0; di < 2; ++di) {
                        const int idx = g.interior_index(ci + di, cj + dj);
                        if (idx >= 0) integral += quarter * col[idx];
                    }
            }
            const double expect =
                (s.block == basis.block && s.continuum == basis.continuum[k]) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(integral - expect));
        }
    }
    return worst;
}

}  // namespace mspint
