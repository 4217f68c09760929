#include "mspint/local_solve.hpp"

namespace mspint {

LocalNodes local_nodes(const FineGrid& grid, const CellRect& rect) {
    LocalNodes ln;
    ln.rect = rect;
    const int w = rect.width() + 1;
    ln.local.assign(static_cast<std::size_t>(w) * (rect.height() + 1), -1);
    for (int j = rect.y0 + 1; j < rect.y1; ++j)
        for (int i = rect.x0 + 1; i < rect.x1; ++i) {
            const int g = grid.interior_index(i, j);
            if (g < 0) continue;
            ln.local[(i - rect.x0) + (j - rect.y0) * w] = ln.size();
            ln.global.push_back(g);
        }
    return ln;
}

SpMat restrict_matrix(const SpMat& global, const LocalNodes& nodes) {
    std::vector<int> to_local(global.rows(), -1);
    for (int k = 0; k < nodes.size(); ++k) to_local[nodes.global[k]] = k;
    std::vector<Triplet> trip;
    for (int k = 0; k < nodes.size(); ++k) {
        const int col = nodes.global[k];
        for (SpMat::InnerIterator it(global, col); it; ++it) {
            const int r = to_local[it.row()];
            if (r >= 0) trip.emplace_back(r, k, it.value());
        }
    }
    SpMat out(nodes.size(), nodes.size());
    out.setFromTriplets(trip.begin(), trip.end());
    out.makeCompressed();
    return out;
}

Eigen::SparseVector<double> cell_integral_row(const FineGrid& grid, const LocalNodes& nodes,
                                              const std::vector<int>& cells) {
    const double quarter = grid.h() * grid.h() / 4.0;
    Vec dense = Vec::Zero(nodes.size());
    for (int c : cells) {
        const int ci = c % grid.n, cj = c / grid.n;
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
                const int i = ci + di, j = cj + dj;
                if (i <= nodes.rect.x0 || i >= nodes.rect.x1 || j <= nodes.rect.y0 || j >= nodes.rect.y1)
                    continue;
                const int k = nodes.local_id(i, j);
                if (k >= 0) dense[k] += quarter;
            }
    }
    return dense.sparseView();
}

ConstrainedMinimizer::ConstrainedMinimizer(const SpMat& stiffness, const SpMat& constraints) {
    if (constraints.cols() != stiffness.rows())
        throw std::invalid_argument("constraint width does not match the local space");
    Eigen::SimplicialLDLT<SpMat> a_factor(stiffness);
    if (a_factor.info() != Eigen::Success)
        throw NumericalError("local stiffness factorization failed");
    const Mat ct = Mat(constraints.transpose());
    a_inv_ct_ = a_factor.solve(ct);
    schur_ = constraints * a_inv_ct_;
    schur_ = 0.5 * (schur_ + schur_.transpose()).eval();
    schur_factor_.compute(schur_);
    if (schur_factor_.info() != Eigen::Success || !schur_factor_.isPositive() ||
        schur_factor_.rcond() < 1e-14)
        throw NumericalError("singular saddle-point system (redundant constraints)");
}

Mat ConstrainedMinimizer::solve(const Mat& targets) const {
    return a_inv_ct_ * schur_factor_.solve(targets);
}

Mat ConstrainedMinimizer::multipliers(const Mat& targets) const {
    return -schur_factor_.solve(targets);
}

}  // namespace mspint
