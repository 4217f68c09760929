#pragma once

#include "mspint/nlmc.hpp"

#include <string>
#include <vector>

namespace mspint {

/// Galerkin blocks of the split space V_H = V_H1 + V_H2.
struct CoarseMatrices {
    Mat M11, A11, M22, A22, M12, A12;

    int d1() const { return static_cast<int>(M11.rows()); }
    int d2() const { return static_cast<int>(M22.rows()); }
    void validate() const;
};

/// Projected load pair F1 = Psi1^T b, F2 = Psi2^T b for a spatial load b, with
/// the same time factor as the source it came from.
struct CoarseLoad {
    Vec f1, f2;
    double time_rate = 0.0;

    double factor(double t) const { return 1.0 + time_rate * t; }
    static CoarseLoad zero(int d1, int d2) { return {Vec::Zero(d1), Vec::Zero(d2), 0.0}; }
};

/// Provenance of a column of Psi1 / Psi2.
struct ColumnTag {
    enum Kind { Mean, Matrix, Fracture } kind;
    int block = -1;      // -1 for the mean basis
    int continuum = -1;  // fracture index within the block (>= 1), 0 for matrix
};

struct MultiscaleSpace {
    Mat psi1;  // interior nodes x d1: mean-subtracted fracture bases (V_H1)
    Mat psi2;  // interior nodes x d2: [psi_bar, matrix bases] (V_H2)
    Vec psi_bar;
    std::vector<ColumnTag> tags1, tags2;
    CoarseMatrices mats;
    double max_asymmetry = 0.0;  // before symmetrization
    std::vector<std::string> notes;

    int d1() const { return static_cast<int>(psi1.cols()); }
    int d2() const { return static_cast<int>(psi2.cols()); }
    /// Fine interior vector Psi1 u + Psi2 w.
    Vec reconstruct(const Vec& u, const Vec& w) const { return psi1 * u + psi2 * w; }
};

/// Builds V_H1 / V_H2 from NLMC bases.
///
/// psi_bar is the average of all bases. Every fracture basis is made
/// s-orthogonal to psi_bar, with s(u, v) = int kappa H^-2 u v; the last one is
/// left out because the full set together with psi_bar and the matrix bases is
/// linearly dependent. psi_bar itself is left out when there are no fractures
/// (it then lies in the span of the matrix bases). Any remaining M_f-dependent
/// column is removed and noted.
MultiscaleSpace split_spaces(const std::vector<LocalBasis>& bases, const FineOperators& ops,
                             const PermeabilityField& field, const CoarsePartition& partition);

/// The six Galerkin products; the symmetric ones are symmetrized and the
/// largest relative asymmetry is returned through `max_asymmetry`.
CoarseMatrices project_coarse(const Mat& psi1, const Mat& psi2, const FineOperators& ops,
                              double* max_asymmetry = nullptr);

CoarseLoad project_load(const MultiscaleSpace& space, const Vec& fine_load, double time_rate);

struct SubspaceAngle {
    double gamma = 0.0;
    bool degenerate = false;  // one of the spaces is empty
};

/// Largest L2 cosine between V_H1 and V_H2: top singular value of
/// L11^{-1} M12 L22^{-T} with M11 = L11 L11^T, M22 = L22 L22^T.
SubspaceAngle subspace_angle(const CoarseMatrices& mats);

}  // namespace mspint
