#include "mspint/multiscale_space.hpp"
#include "mspint/timestepping.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mspint;

namespace {

struct Built {
    FineGrid grid;
    PermeabilityField field;
    FineOperators ops;
    CoarsePartition part;
    ContinuumDecomposition cont;
    std::vector<LocalBasis> bases;
    MultiscaleSpace space;
};

Built build(int n, double H, int layers, std::vector<Channel> ch) {
    Built b;
    b.grid = build_fine_grid(n, n);
    b.field = generate_field(ch, 1.0, 1e4, b.grid);
    b.ops = assemble_fine(b.grid, b.field);
    b.part = build_coarse_partition(b.grid, H, layers);
    b.cont = detect_continua(b.part, b.field);
    b.bases = build_nlmc_bases(b.cont, b.part, b.ops);
    b.space = split_spaces(b.bases, b.ops, b.field, b.part);
    return b;
}

}  // namespace

TEST(Space, SplitDimensionsAndOrthogonality) {
    const auto b = build(20, 0.25, 1, {{2, 18, 9, 11}, {3, 4, 2, 7}});
    const int L = b.cont.total_fractures();
    int matrix_bases = 0;
    for (const auto& bc : b.cont.blocks) matrix_bases += !bc.matrix_cells.empty();
    EXPECT_EQ(b.space.d1(), L - 1);
    EXPECT_EQ(b.space.d2(), matrix_bases + 1);
    EXPECT_EQ(b.space.tags2.front().kind, ColumnTag::Mean);

    // mean-subtracted fracture bases are s-orthogonal to psi_bar, s = kappa H^-2 mass
    std::vector<double> w(b.field.kappa.size());
    for (std::size_t c = 0; c < w.size(); ++c) w[c] = b.field.kappa[c] * 16.0;
    const SpMat s = assemble_weighted_mass(b.grid, w);
    const Vec sb = s * b.space.psi_bar;
    for (int k = 0; k < b.space.d1(); ++k)
        EXPECT_LE(std::abs(b.space.psi1.col(k).dot(sb)),
                  1e-10 * std::sqrt(b.space.psi1.col(k).dot(s * b.space.psi1.col(k)) * b.space.psi_bar.dot(sb)));
}

TEST(Space, CoarseMatricesMatchDenseProducts) {
    const auto b = build(20, 0.25, 1, {{2, 18, 9, 11}});
    const auto d = oracle::dense_fem(20, b.field.kappa);
    const Mat& P1 = b.space.psi1;
    const Mat& P2 = b.space.psi2;
    const auto& m = b.space.mats;
    auto rel = [](const Mat& a, const Mat& ref) { return (a - ref).norm() / std::max(ref.norm(), 1e-300); };
    EXPECT_LE(rel(m.M11, P1.transpose() * d.mass * P1), 1e-12);
    EXPECT_LE(rel(m.A11, P1.transpose() * d.stiffness * P1), 1e-10);
    EXPECT_LE(rel(m.M22, P2.transpose() * d.mass * P2), 1e-12);
    EXPECT_LE(rel(m.A22, P2.transpose() * d.stiffness * P2), 1e-10);
    EXPECT_LE(rel(m.M12, P1.transpose() * d.mass * P2), 1e-12);
    EXPECT_LE(rel(m.A12, P1.transpose() * d.stiffness * P2), 1e-10);
    EXPECT_LE(b.space.max_asymmetry, 1e-12);
    EXPECT_NO_THROW(m.validate());

    const Vec load = Vec::LinSpaced(b.grid.interior_count(), -1.0, 2.0);
    const CoarseLoad cl = project_load(b.space, load, 0.5);
    EXPECT_LE((cl.f1 - P1.transpose() * load).norm(), 1e-12 * cl.f1.norm());
    EXPECT_LE((cl.f2 - P2.transpose() * load).norm(), 1e-12 * cl.f2.norm());
    EXPECT_DOUBLE_EQ(cl.factor(2.0), 2.0);
}

TEST(Space, SubspaceAngleMatchesGramSchmidtOracle) {
    const auto b = build(20, 0.25, 1, {{2, 18, 9, 11}, {12, 14, 1, 8}});
    const SubspaceAngle sa = subspace_angle(b.space.mats);
    const Mat M = Mat(b.ops.mass);
    const Mat Q1 = oracle::orthonormalize(b.space.psi1, M);
    const Mat Q2 = oracle::orthonormalize(b.space.psi2, M);
    const Mat cross = Q1.transpose() * M * Q2;
    const double ref = Eigen::JacobiSVD<Mat>(cross).singularValues()[0];
    EXPECT_NEAR(sa.gamma, ref, 1e-8);
    EXPECT_FALSE(sa.degenerate);
    EXPECT_GE(sa.gamma, 0.0);
    EXPECT_LT(sa.gamma, 1.0);

    // random pairs never beat the maximal cosine
    std::mt19937 rng(17);
    for (int t = 0; t < 200; ++t) {
        const Vec a = b.space.psi1 * oracle::random_mat(b.space.d1(), 1, rng);
        const Vec c = b.space.psi2 * oracle::random_mat(b.space.d2(), 1, rng);
        const double cosine = std::abs(a.dot(M * c)) / std::sqrt(a.dot(M * a) * c.dot(M * c));
        EXPECT_LE(cosine, sa.gamma + 1e-12);
    }
}

TEST(Space, HomogeneousMediumHasEmptyFirstSpace) {
    const auto b = build(20, 0.25, 1, {});
    EXPECT_EQ(b.space.d1(), 0);
    EXPECT_EQ(b.space.d2(), 16);
    const SubspaceAngle sa = subspace_angle(b.space.mats);
    EXPECT_TRUE(sa.degenerate);
    EXPECT_EQ(sa.gamma, 0.0);
}

TEST(Space, ReconstructAndInitialProjection) {
    const auto b = build(20, 0.25, 1, {{2, 18, 9, 11}});
    // a function inside V_H1 + V_H2 is reproduced by the split projection when gamma = 0 only,
    // but the stacked projection onto [psi1 psi2] always reproduces it
    const Vec u = Vec::LinSpaced(b.space.d1(), 0.1, 0.9), w = Vec::LinSpaced(b.space.d2(), -1.0, 1.0);
    const Vec f = b.space.reconstruct(u, w);
    Mat P(f.size(), b.space.d1() + b.space.d2());
    P << b.space.psi1, b.space.psi2;
    const Mat M = Mat(b.ops.mass);
    const Vec coef = (P.transpose() * M * P).ldlt().solve(P.transpose() * M * f);
    EXPECT_LE((coef.head(b.space.d1()) - u).norm(), 1e-8 * u.norm());
    const SplitState s = project_initial(f, b.space, b.ops);
    EXPECT_LE((b.space.mats.M11 * s.u - b.space.psi1.transpose() * M * f).norm(), 1e-10 * s.u.norm());
    EXPECT_EQ(s.u_prev, s.u);
}
