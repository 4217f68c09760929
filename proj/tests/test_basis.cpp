#include "mspint/cem.hpp"
#include "mspint/nlmc.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <map>

using namespace mspint;

namespace {

struct Setup {
    FineGrid grid;
    PermeabilityField field;
    FineOperators ops;
    CoarsePartition part;
    ContinuumDecomposition cont;
};

Setup channel_setup(int n, double H, int layers, std::vector<Channel> channels, double contrast = 1e4) {
    Setup s;
    s.grid = build_fine_grid(n, n);
    s.field = generate_field(channels, 1.0, contrast, s.grid);
    s.ops = assemble_fine(s.grid, s.field);
    s.part = build_coarse_partition(s.grid, H, layers);
    s.cont = detect_continua(s.part, s.field);
    return s;
}

}  // namespace

TEST(ConstrainedMinimizer, MatchesDenseKkt) {
    std::mt19937 rng(3);
    const Mat A = oracle::random_spd(12, rng);
    const Mat C = oracle::random_mat(3, 12, rng);
    const Mat R = oracle::random_mat(3, 2, rng);
    ConstrainedMinimizer cm(A.sparseView(), C.sparseView());
    const Mat X = cm.solve(R);
    for (int k = 0; k < 2; ++k) {
        const Vec ref = oracle::dense_kkt(A, C, R.col(k));
        EXPECT_LE((X.col(k) - ref).norm() / ref.norm(), 1e-12);
    }
    EXPECT_LE((C * X - R).cwiseAbs().maxCoeff(), 1e-12);
    // stationarity: A x + C^T mu = 0
    const Mat mu = cm.multipliers(R);
    EXPECT_LE((A * X + C.transpose() * mu).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ConstrainedMinimizer, RedundantConstraintsRejected) {
    std::mt19937 rng(5);
    const Mat A = oracle::random_spd(8, rng);
    Mat C = oracle::random_mat(3, 8, rng);
    C.row(2) = C.row(0) + C.row(1);
    EXPECT_THROW(ConstrainedMinimizer(A.sparseView(), C.sparseView()), NumericalError);
}

TEST(Nlmc, MatchesDenseKktOracle) {
    const auto s = channel_setup(20, 0.25, 1, {{2, 18, 9, 11}});
    const int block = 5;
    const LocalBasis lb = build_nlmc_basis(block, s.cont, s.part, s.ops);

    // local unknowns: grid-interior nodes strictly inside K^+
    const CellRect r = s.part.oversampled(block);
    std::vector<int> nodes;
    for (int j = r.y0 + 1; j < r.y1; ++j)
        for (int i = r.x0 + 1; i < r.x1; ++i)
            if (s.grid.is_interior(i, j)) nodes.push_back(s.grid.interior_index(i, j));
    ASSERT_EQ(static_cast<int>(nodes.size()), lb.nodes.size());
    const auto d = oracle::dense_fem(20, s.field.kappa);
    Mat A(nodes.size(), nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = 0; b < nodes.size(); ++b) A(a, b) = d.stiffness(nodes[a], nodes[b]);

    // integral of a Q1 function over a cell = h^2/4 * sum of its corner values
    std::map<int, int> pos;
    for (std::size_t a = 0; a < nodes.size(); ++a) pos[nodes[a]] = static_cast<int>(a);
    const double h = s.grid.h();
    auto row_for = [&](const std::vector<int>& cells) {
        Vec row = Vec::Zero(nodes.size());
        for (int c : cells) {
            const int ci = c % 20, cj = c / 20;
            const int corners[4][2] = {{ci, cj}, {ci + 1, cj}, {ci + 1, cj + 1}, {ci, cj + 1}};
            for (auto& k : corners) {
                const int id = s.grid.interior_index(k[0], k[1]);
                auto it = pos.find(id);
                if (id >= 0 && it != pos.end()) row[it->second] += h * h / 4.0;
            }
        }
        return row;
    };
    std::vector<Vec> rows;
    std::vector<std::pair<int, int>> tags;
    for (int b : s.part.blocks_in_oversampled(block)) {
        const auto& bc = s.cont.blocks[b];
        if (!bc.matrix_cells.empty()) {
            rows.push_back(row_for(bc.matrix_cells));
            tags.emplace_back(b, 0);
        }
        for (int f = 0; f < bc.fracture_count(); ++f) {
            rows.push_back(row_for(bc.fractures[f]));
            tags.emplace_back(b, f + 1);
        }
    }
    Mat C(rows.size(), nodes.size());
    for (std::size_t k = 0; k < rows.size(); ++k) C.row(k) = rows[k].transpose();

    ASSERT_EQ(lb.columns(), 1 + s.cont.blocks[block].fracture_count());
    for (int k = 0; k < lb.columns(); ++k) {
        Vec target = Vec::Zero(rows.size());
        for (std::size_t q = 0; q < tags.size(); ++q)
            if (tags[q] == std::make_pair(block, lb.continuum[k])) target[q] = 1.0;
        const Vec ref = oracle::dense_kkt(A, C, target);
        EXPECT_LE((lb.values.col(k) - ref).norm() / ref.norm(), 1e-9) << "column " << k;
    }
    EXPECT_LE(nlmc_constraint_residual(lb, s.cont, s.part), 1e-8);
}

TEST(Nlmc, ConstraintsAndWorkerDeterminism) {
    const auto s = channel_setup(40, 0.1, 2, {{3, 37, 19, 21}, {10, 12, 2, 30}});
    const auto b1 = build_nlmc_bases(s.cont, s.part, s.ops, 1);
    const auto b3 = build_nlmc_bases(s.cont, s.part, s.ops, 3);
    ASSERT_EQ(b1.size(), b3.size());
    for (std::size_t i = 0; i < b1.size(); ++i) {
        EXPECT_LE(nlmc_constraint_residual(b1[i], s.cont, s.part), 1e-8);
        ASSERT_EQ(b1[i].values.size(), b3[i].values.size());
        EXPECT_EQ(0, std::memcmp(b1[i].values.data(), b3[i].values.data(), sizeof(double) * b1[i].values.size()));
    }
}

TEST(Nlmc, BlockWithoutMatrixHasNoMatrixBasis) {
    // block 0 (cells 0..4 x 0..4) entirely channel
    const auto s = channel_setup(20, 0.25, 1, {{0, 5, 0, 5}});
    const LocalBasis lb = build_nlmc_basis(0, s.cont, s.part, s.ops);
    ASSERT_EQ(lb.columns(), 1);
    EXPECT_EQ(lb.continuum[0], 1);
    EXPECT_FALSE(lb.notes.empty());
    EXPECT_LE(nlmc_constraint_residual(lb, s.cont, s.part), 1e-8);
}

TEST(Cem, AuxiliaryEigenpairs) {
    const auto s = channel_setup(20, 0.25, 1, {{2, 18, 9, 11}});
    const auto w = cem_weight(s.part, s.field, CemWeight::KappaH2);
    for (int block : {0, 5}) {
        const AuxBlock aux = aux_eigen_cem(block, s.part, s.field, w, 3);
        ASSERT_EQ(aux.eigenvalues.size(), 3);
        const Mat& V = aux.eigenvectors;
        const Mat r = aux.stiffness * V - aux.weighted_mass * V * aux.eigenvalues.asDiagonal();
        EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-8 * aux.stiffness.cwiseAbs().maxCoeff());
        EXPECT_LE((V.transpose() * aux.weighted_mass * V - Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
        for (int k = 1; k < 3; ++k) EXPECT_GE(aux.eigenvalues[k], aux.eigenvalues[k - 1]);
        // dense generalized eigensolver on the same pencil
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(aux.stiffness, aux.weighted_mass);
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR(aux.eigenvalues[k], ges.eigenvalues()[k], 1e-8 * std::max(1.0, ges.eigenvalues()[k]));
    }
    // interior block with natural boundary: constants are in the kernel
    const AuxBlock inner = aux_eigen_cem(5, s.part, s.field, w, 2);
    EXPECT_LE(std::abs(inner.eigenvalues[0]), 1e-8 * inner.eigenvalues[1]);
}

TEST(Cem, BasisConstraints) {
    const auto s = channel_setup(20, 0.25, 1, {{2, 18, 9, 11}});
    for (auto kind : {CemWeight::KappaH2, CemWeight::PartitionOfUnity}) {
        const CemSpace cs = build_cem_space(s.part, s.field, s.ops, s.cont, kind, 0, 2);
        ASSERT_EQ(static_cast<int>(cs.bases.size()), s.part.block_count());
        for (std::size_t b = 0; b < cs.bases.size(); ++b) {
            EXPECT_EQ(cs.bases[b].columns(), 1 + s.cont.blocks[b].fracture_count());
            EXPECT_LE(cem_constraint_residual(cs.bases[b], cs.aux, s.part), 1e-8);
        }
    }
}

TEST(Cem, PartitionOfUnityWeightIsPositive) {
    const auto s = channel_setup(20, 0.25, 1, {});
    const auto w = cem_weight(s.part, s.field, CemWeight::PartitionOfUnity);
    for (double x : w) EXPECT_GT(x, 0.0);
    const auto k = cem_weight(s.part, s.field, CemWeight::KappaH2);
    EXPECT_NEAR(k[0], 16.0, 1e-12);  // kappa = 1, H = 1/4
}
