#pragma once

#include "mspint/local_solve.hpp"

#include <string>
#include <vector>

namespace mspint {

/// Basis functions of one coarse block, stored on the unknowns of its oversampled region.
struct LocalBasis {
    int block = -1;
    LocalNodes nodes;
    /// Continuum of each column: 0 = matrix, k >= 1 = k-th fracture component of the block.
    std::vector<int> continuum;
    Mat values;  // nodes.size() x columns
    std::vector<std::string> notes;

    int columns() const { return static_cast<int>(values.cols()); }
    /// Column scattered to the full interior index set (zero off support).
    Vec global_column(int k, int interior_count) const;
};

/// Constrained energy-minimizing NLMC basis of block `block`: for every continuum
/// of the block, the minimizer of a(psi, psi) over V_0(K^+) whose averages over
/// every continuum of every block inside K^+ are the Kronecker delta.
/// A block whose matrix region is empty has no matrix constraint and no psi_0.
LocalBasis build_nlmc_basis(int block, const ContinuumDecomposition& continua,
                            const CoarsePartition& partition, const FineOperators& ops);

/// All blocks, parallel over blocks, merged in block order.
std::vector<LocalBasis> build_nlmc_bases(const ContinuumDecomposition& continua,
                                         const CoarsePartition& partition,
                                         const FineOperators& ops, int workers = 1);

/// max |int_{S} psi - delta| over every continuum S of every block in K^+ and every column.
double nlmc_constraint_residual(const LocalBasis& basis, const ContinuumDecomposition& continua,
                                const CoarsePartition& partition);

}  // namespace mspint
