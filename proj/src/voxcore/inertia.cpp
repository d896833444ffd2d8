#include "formfunc/voxcore/inertia.hpp"

namespace formfunc {

InertiaResult inertia_of(const VoxelGrid& grid, double mass) {
    validate(grid);
    if (!(mass > 0)) throw Error("inertia_of: mass must be positive");
    const std::int64_t count = occupied_count(grid);
    if (count == 0) throw Error("inertia_of: grid has no occupied voxels");

    const double cell_mass = mass / double(count);
    const double side = grid.voxel_size();

    Eigen::Vector3d com = Eigen::Vector3d::Zero();
    for (int y = 0; y < grid.dim; ++y)
        for (int z = 0; z < grid.dim; ++z)
            for (int x = 0; x < grid.dim; ++x)
                if (grid(x, y, z)) com += grid.center(x, y, z);
    com /= double(count);

    Eigen::Matrix3d second = Eigen::Matrix3d::Zero();  // sum of r r^T
    for (int y = 0; y < grid.dim; ++y)
        for (int z = 0; z < grid.dim; ++z)
            for (int x = 0; x < grid.dim; ++x)
                if (grid(x, y, z)) {
                    const Eigen::Vector3d r = grid.center(x, y, z) - com;
                    second += r * r.transpose();
                }

    InertiaResult out;
    out.mass = mass;
    out.center_of_mass = com;
    out.inertia = cell_mass * (second.trace() * Eigen::Matrix3d::Identity() - second) +
                  mass * side * side / 6.0 * Eigen::Matrix3d::Identity();
    // Symmetrize away round-off from the accumulation order.
    out.inertia = 0.5 * (out.inertia + out.inertia.transpose()).eval();
    return out;
}

}  // namespace formfunc
