#include "formfunc/voxcore/grid.hpp"

namespace formfunc {

std::int64_t occupied_count(const VoxelGrid& grid) {
    std::int64_t count = 0;
    for (Eigen::Index i = 0; i < grid.values.size(); ++i) count += grid.values[i] != 0;
    return count;
}

double occupancy_fraction(const VoxelGrid& grid) {
    validate(grid);
    return double(occupied_count(grid)) / double(grid.voxel_count());
}

VoxelGrid threshold(const ProbabilityGrid& grid, float level) {
    VoxelGrid out;
    out.dim = grid.dim;
    out.translate = grid.translate;
    out.scale = grid.scale;
    out.values = (grid.values.array() >= level).cast<std::uint8_t>();
    return out;
}

double iou(const VoxelGrid& a, const VoxelGrid& b) {
    if (a.values.size() != b.values.size()) throw ShapeError("iou: grid sizes differ");
    std::int64_t inter = 0, uni = 0;
    for (Eigen::Index i = 0; i < a.values.size(); ++i) {
        const bool pa = a.values[i] != 0, pb = b.values[i] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

Eigen::Vector2i rotate_index(int dim, int x, int z, QuarterTurns turns) {
    for (int k = 0; k < static_cast<int>(turns); ++k) {
        const int nx = dim - 1 - z;
        z = x;
        x = nx;
    }
    return {x, z};
}

VoxelGrid rotate_quarter(const VoxelGrid& grid, QuarterTurns turns) {
    validate(grid);
    if (turns == QuarterTurns::k0) return grid;
    VoxelGrid out = grid;
    const int d = grid.dim;
    for (int y = 0; y < d; ++y)
        for (int z = 0; z < d; ++z)
            for (int x = 0; x < d; ++x) {
                const Eigen::Vector2i r = rotate_index(d, x, z, turns);
                out(r.x(), y, r.y()) = grid(x, y, z);
            }
    return out;
}

}  // namespace formfunc
