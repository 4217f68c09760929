#pragma once

#include "mspint/grid_fem.hpp"

#include <vector>

namespace mspint {

/// Half-open rectangle of fine cells [x0,x1) x [y0,y1).
struct CellRect {
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool contains_cell(int ci, int cj) const { return ci >= x0 && ci < x1 && cj >= y0 && cj < y1; }
    bool contains(const CellRect& o) const {
        return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1;
    }
};

/// Coarse blocks K_i tiling the unit square, numbered row-major, plus their
/// oversampled neighbourhoods K_i^+ (grown by `layers` coarse blocks, clipped to the domain).
struct CoarsePartition {
    FineGrid grid;
    int cells_per_block = 0;  // H / h
    int blocks_per_axis = 0;  // 1 / H
    int layers = 0;

    int block_count() const { return blocks_per_axis * blocks_per_axis; }
    double H() const { return 1.0 / blocks_per_axis; }
    int block_of_cell(int ci, int cj) const {
        return (cj / cells_per_block) * blocks_per_axis + ci / cells_per_block;
    }
    CellRect block(int b) const;
    CellRect oversampled(int b) const;
    /// Blocks K_j contained in K_b^+, ascending.
    std::vector<int> blocks_in_oversampled(int b) const;
};

CoarsePartition build_coarse_partition(const FineGrid& grid, double H, int layers);

/// Continua of one coarse block: the background matrix region and the
/// 4-connected channel components inside the block (cell indices, ascending).
struct BlockContinua {
    std::vector<int> matrix_cells;
    std::vector<std::vector<int>> fractures;

    int fracture_count() const { return static_cast<int>(fractures.size()); }
};

struct ContinuumDecomposition {
    std::vector<BlockContinua> blocks;

    int total_fractures() const;
};

/// Components are ordered by their smallest cell index.
ContinuumDecomposition detect_continua(const CoarsePartition& partition,
                                       const PermeabilityField& field);

}  // namespace mspint
