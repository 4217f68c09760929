#include "mspint/partition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mspint {

CellRect CoarsePartition::block(int b) const {
    const int bi = b % blocks_per_axis, bj = b / blocks_per_axis;
    return {bi * cells_per_block, (bi + 1) * cells_per_block, bj * cells_per_block,
            (bj + 1) * cells_per_block};
}

CellRect CoarsePartition::oversampled(int b) const {
    const int bi = b % blocks_per_axis, bj = b / blocks_per_axis;
    const int lo_i = std::max(0, bi - layers), hi_i = std::min(blocks_per_axis, bi + layers + 1);
    const int lo_j = std::max(0, bj - layers), hi_j = std::min(blocks_per_axis, bj + layers + 1);
    return {lo_i * cells_per_block, hi_i * cells_per_block, lo_j * cells_per_block,
            hi_j * cells_per_block};
}

std::vector<int> CoarsePartition::blocks_in_oversampled(int b) const {
    const CellRect r = oversampled(b);
    std::vector<int> out;
    for (int bj = r.y0 / cells_per_block; bj < r.y1 / cells_per_block; ++bj)
        for (int bi = r.x0 / cells_per_block; bi < r.x1 / cells_per_block; ++bi)
            out.push_back(bj * blocks_per_axis + bi);
    return out;
}

CoarsePartition build_coarse_partition(const FineGrid& grid, double H, int layers) {
    if (layers < 1) throw std::invalid_argument("oversampling needs at least one coarse layer");
    if (!(H > 0.0) || H > 1.0) throw std::invalid_argument("coarse size H must lie in (0, 1]");
    const double ratio = H * grid.n;
    const long c = std::lround(ratio);
    if (c < 1 || std::abs(ratio - static_cast<double>(c)) > 1e-9 * ratio || grid.n % c != 0) {
        std::ostringstream os;
        os << "coarse size H=" << H << " is not a multiple of h=1/" << grid.n
           << " that tiles the domain";
        throw std::invalid_argument(os.str());
    }
    CoarsePartition p;
    p.grid = grid;
    p.cells_per_block = static_cast<int>(c);
    p.blocks_per_axis = grid.n / p.cells_per_block;
    p.layers = layers;
    return p;
}

int ContinuumDecomposition::total_fractures() const {
    int total = 0;
    for (const auto& b : blocks) total += b.fracture_count();
    return total;
}

ContinuumDecomposition detect_continua(const CoarsePartition& partition,
                                       const PermeabilityField& field) {
    const FineGrid& g = partition.grid;
    if (static_cast<int>(field.channel.size()) != g.cell_count())
        throw std::invalid_argument("field masks do not match the partition grid");

    ContinuumDecomposition dec;
    dec.blocks.resize(partition.block_count());
    std::vector<int> label(g.cell_count(), -1);
    std::vector<int> stack;

    for (int b = 0; b < partition.block_count(); ++b) {
        const CellRect r = partition.block(b);
        BlockContinua& bc = dec.blocks[b];
        // Scan in ascending cell index (row-major), so components come out
        // ordered by their smallest cell.
        for (int cj = r.y0; cj < r.y1; ++cj)
            for (int ci = r.x0; ci < r.x1; ++ci) {
                const int c = g.cell_index(ci, cj);
                if (!field.channel[c]) {
                    bc.matrix_cells.push_back(c);
                    continue;
                }
                if (label[c] >= 0) continue;
                const int id = bc.fracture_count();
                std::vector<int> comp;
                label[c] = id;
                stack.assign(1, c);
                while (!stack.empty()) {
                    const int cur = stack.back();
                    stack.pop_back();
                    comp.push_back(cur);
                    const int x = cur % g.n, y = cur / g.n;
                    const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
                    for (const auto& nb : nbr) {
                        if (!r.contains_cell(nb[0], nb[1])) continue;
                        const int nc = g.cell_index(nb[0], nb[1]);
                        if (field.channel[nc] && label[nc] < 0) {
                            label[nc] = id;
                            stack.push_back(nc);
                        }
                    }
                }
                std::sort(comp.begin(), comp.end());
                bc.fractures.push_back(std::move(comp));
            }
    }
    return dec;
}

}  // namespace mspint
