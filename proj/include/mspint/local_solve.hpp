#pragma once

#include "mspint/partition.hpp"

#include <vector>

namespace mspint {

/// Unknowns of V_0(rect): grid-interior nodes strictly inside a cell rectangle.
struct LocalNodes {
    CellRect rect;
    std::vector<int> global;  // interior index of each local unknown
    std::vector<int> local;   // (i - x0) + (j - y0) * (width + 1) -> local id, -1 if not an unknown

    int size() const { return static_cast<int>(global.size()); }
    int local_id(int i, int j) const {
        return local[(i - rect.x0) + (j - rect.y0) * (rect.width() + 1)];
    }
};

LocalNodes local_nodes(const FineGrid& grid, const CellRect& rect);

/// Principal submatrix of an interior-node matrix on the local unknowns.
SpMat restrict_matrix(const SpMat& global, const LocalNodes& nodes);

/// Row of integral weights: row . v = int_{cells} v for v in V_0(rect).
Eigen::SparseVector<double> cell_integral_row(const FineGrid& grid, const LocalNodes& nodes,
                                              const std::vector<int>& cells);

/// Energy minimization under linear constraints,
///     min a(v, v)  s.t.  C v = r,
/// solved through the Schur complement of the KKT system
///     [A  C^T] [v]   [0]
///     [C   0 ] [mu] = [r].
/// One factorization serves every right-hand side r.
class ConstrainedMinimizer {
public:
    ConstrainedMinimizer(const SpMat& stiffness, const SpMat& constraints);

    /// Columns of `targets` are constraint right-hand sides; returns one solution per column.
    Mat solve(const Mat& targets) const;
    /// Lagrange multipliers matching `solve`.
    Mat multipliers(const Mat& targets) const;

    int constraint_count() const { return static_cast<int>(schur_.rows()); }

private:
    Mat a_inv_ct_;  // A^{-1} C^T
    Mat schur_;     // C A^{-1} C^T
    Eigen::LDLT<Mat> schur_factor_;
};

}  // namespace mspint
