#pragma once

#include "mspint/nlmc.hpp"

#include <vector>

namespace mspint {

/// Weight of the auxiliary inner product s(u, v) = int kappa_tilde u v.
enum class CemWeight {
    KappaH2,          // kappa * H^-2
    PartitionOfUnity  // kappa * sum_i |grad chi_i|^2, chi_i bilinear coarse hats
};

/// kappa_tilde per fine cell (PoU variant sampled at cell centres).
std::vector<double> cem_weight(const CoarsePartition& partition, const PermeabilityField& field,
                               CemWeight kind);

/// Local spectral problem of one block with natural boundary conditions on
/// the block boundary interior to the domain.
struct AuxBlock {
    int block = -1;
    std::vector<int> interior;  // interior index of each local node (block nodes off the Dirichlet boundary)
    Mat stiffness;              // local a-form
    Mat weighted_mass;          // local s_i-form
    Vec eigenvalues;            // ascending, first J
    Mat eigenvectors;           // s_i-orthonormal columns
};

AuxBlock aux_eigen_cem(int block, const CoarsePartition& partition, const PermeabilityField& field,
                       const std::vector<double>& weight, int count);

/// phi_j of `block`: minimizes a(phi, phi) on V(K^+) subject to
/// s(phi, nu) = s(psi_j, nu) for every auxiliary function nu of blocks inside K^+.
LocalBasis build_cem_basis(int block, const std::vector<AuxBlock>& aux,
                           const CoarsePartition& partition, const FineOperators& ops);

/// max |s(phi_j, psi_k^l) - delta| over all auxiliary functions in K^+.
double cem_constraint_residual(const LocalBasis& basis, const std::vector<AuxBlock>& aux,
                               const CoarsePartition& partition);

struct CemSpace {
    std::vector<AuxBlock> aux;
    std::vector<LocalBasis> bases;
};

/// `count_per_block` <= 0 selects m_i + 1 eigenfunctions (one per continuum).
CemSpace build_cem_space(const CoarsePartition& partition, const PermeabilityField& field,
                         const FineOperators& ops, const ContinuumDecomposition& continua,
                         CemWeight weight = CemWeight::KappaH2, int count_per_block = 0,
                         int workers = 1);

}  // namespace mspint
