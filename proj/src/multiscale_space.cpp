#include "mspint/multiscale_space.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace mspint {

void CoarseMatrices::validate() const {
    const auto sq = [](const Mat& m, int d) { return m.rows() == d && m.cols() == d; };
    if (!sq(M11, d1()) || !sq(A11, d1()) || !sq(M22, d2()) || !sq(A22, d2()) ||
        M12.rows() != d1() || M12.cols() != d2() || A12.rows() != d1() || A12.cols() != d2())
        throw std::invalid_argument("coarse matrices have inconsistent shapes");
}

namespace {

double symmetrize(Mat& m) {
    if (m.size() == 0) return 0.0;
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    m = 0.5 * (m + m.transpose()).eval();
    return scale > 0.0 ? asym / scale : 0.0;
}

}  // namespace

CoarseMatrices project_coarse(const Mat& psi1, const Mat& psi2, const FineOperators& ops,
                              double* max_asymmetry) {
    // sparse-times-dense with zero columns is not safe in Eigen
    auto apply = [](const SpMat& a, const Mat& x) { return x.cols() ? Mat(a * x) : Mat(a.rows(), 0); };
    const Mat mp1 = apply(ops.mass, psi1), mp2 = apply(ops.mass, psi2);
    const Mat ap1 = apply(ops.stiffness, psi1), ap2 = apply(ops.stiffness, psi2);
    CoarseMatrices c;
    c.M11 = psi1.transpose() * mp1;
    c.A11 = psi1.transpose() * ap1;
    c.M22 = psi2.transpose() * mp2;
    c.A22 = psi2.transpose() * ap2;
    c.M12 = psi1.transpose() * mp2;
    c.A12 = psi1.transpose() * ap2;
    double asym = 0.0;
    for (Mat* m : {&c.M11, &c.A11, &c.M22, &c.A22}) asym = std::max(asym, symmetrize(*m));
    if (max_asymmetry) *max_asymmetry = asym;
    return c;
}

MultiscaleSpace split_spaces(const std::vector<LocalBasis>& bases, const FineOperators& ops,
                             const PermeabilityField& field, const CoarsePartition& partition) {
    const int ni = ops.grid.interior_count();
    MultiscaleSpace sp;

    std::vector<Vec> fracture, matrix;
    std::vector<ColumnTag> ftags, mtags;
    for (const auto& lb : bases) {
        sp.notes.insert(sp.notes.end(), lb.notes.begin(), lb.notes.end());
        for (int k = 0; k < lb.columns(); ++k) {
            if (lb.continuum[k] == 0) {
                matrix.push_back(lb.global_column(k, ni));
                mtags.push_back({ColumnTag::Matrix, lb.block, 0});
            } else {
                fracture.push_back(lb.global_column(k, ni));
                ftags.push_back({ColumnTag::Fracture, lb.block, lb.continuum[k]});
            }
        }
    }
    const int nf = static_cast<int>(fracture.size());
    const int total = nf + static_cast<int>(matrix.size());
    if (total == 0) throw std::invalid_argument("split_spaces: no basis functions");

    sp.psi_bar = Vec::Zero(ni);
    for (const auto& v : matrix) sp.psi_bar += v;
    for (const auto& v : fracture) sp.psi_bar += v;
    sp.psi_bar /= (nf > 0 ? nf : total);

    std::vector<double> s_weight(field.kappa.size());
    const double H = partition.H();
    for (std::size_t c = 0; c < s_weight.size(); ++c) s_weight[c] = field.kappa[c] / (H * H);
    const SpMat s_form = assemble_weighted_mass(ops.grid, s_weight);
    const Vec s_bar = s_form * sp.psi_bar;
    const double bar_norm = sp.psi_bar.dot(s_bar);

    // Candidate columns: V_H2 first so that psi_bar and the matrix bases are kept
    // when the dependency check has to drop something.
    std::vector<Vec> cand;
    std::vector<ColumnTag> tags;
    std::vector<int> space_of;
    if (nf > 0) {
        cand.push_back(sp.psi_bar);
        tags.push_back({ColumnTag::Mean, -1, -1});
        space_of.push_back(2);
    } else {
        sp.notes.push_back("no fracture bases: V_H1 is empty and psi_bar is omitted from V_H2");
    }
    for (std::size_t k = 0; k < matrix.size(); ++k) {
        cand.push_back(matrix[k]);
        tags.push_back(mtags[k]);
        space_of.push_back(2);
    }
    for (int k = 0; k + 1 < nf; ++k) {
        cand.push_back(fracture[k] - (fracture[k].dot(s_bar) / bar_norm) * sp.psi_bar);
        tags.push_back(ftags[k]);
        space_of.push_back(1);
    }

    // Incremental Cholesky of the M_f Gram matrix; a column whose pivot collapses
    // relative to its own norm is linearly dependent on the earlier ones.
    const int nc = static_cast<int>(cand.size());
    Mat all(ni, nc);
    for (int k = 0; k < nc; ++k) all.col(k) = cand[k];
    const Mat gram = all.transpose() * (ops.mass * all);
    Mat r = Mat::Zero(nc, nc);
    std::vector<int> keep;
    for (int k = 0; k < nc; ++k) {
        Vec rk(keep.size());
        for (std::size_t a = 0; a < keep.size(); ++a) {
            double v = gram(keep[a], k);
            for (std::size_t b = 0; b < a; ++b) v -= rk[b] * r(b, a);
            rk[a] = v / r(a, a);
        }
        const double pivot = gram(k, k) - rk.squaredNorm();
        if (!(pivot > 1e-10 * gram(k, k))) {
            sp.notes.push_back("dropped linearly dependent column (block " +
                               std::to_string(tags[k].block) + ", continuum " +
                               std::to_string(tags[k].continuum) + ")");
            continue;
        }
        const int a = static_cast<int>(keep.size());
        for (int b = 0; b < a; ++b) r(b, a) = rk[b];
        r(a, a) = std::sqrt(pivot);
        keep.push_back(k);
    }

    std::vector<int> k1, k2;
    for (int k : keep) (space_of[k] == 1 ? k1 : k2).push_back(k);
    sp.psi1.resize(ni, static_cast<int>(k1.size()));
    sp.psi2.resize(ni, static_cast<int>(k2.size()));
    for (std::size_t a = 0; a < k1.size(); ++a) {
        sp.psi1.col(a) = all.col(k1[a]);
        sp.tags1.push_back(tags[k1[a]]);
    }
    for (std::size_t a = 0; a < k2.size(); ++a) {
        sp.psi2.col(a) = all.col(k2[a]);
        sp.tags2.push_back(tags[k2[a]]);
    }
    sp.mats = project_coarse(sp.psi1, sp.psi2, ops, &sp.max_asymmetry);
    return sp;
}

CoarseLoad project_load(const MultiscaleSpace& space, const Vec& fine_load, double time_rate) {
    return {space.psi1.transpose() * fine_load, space.psi2.transpose() * fine_load, time_rate};
}

SubspaceAngle subspace_angle(const CoarseMatrices& mats) {
    if (mats.d1() == 0 || mats.d2() == 0) return {0.0, true};
    Eigen::LLT<Mat> l11(mats.M11), l22(mats.M22);
    if (l11.info() != Eigen::Success || l22.info() != Eigen::Success)
        throw NumericalError("subspace angle: coarse mass matrix is not SPD");
    // L11^{-1} M12 L22^{-T}
    Mat c = l11.matrixL().solve(mats.M12);
    c = l22.matrixL().solve(c.transpose()).transpose();
    Eigen::JacobiSVD<Mat> svd(c);
    return {std::min(1.0, svd.singularValues()(0)), false};
}

}  // namespace mspint
