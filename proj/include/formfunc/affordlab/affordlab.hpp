#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "formfunc/voxcore/grid.hpp"

namespace formfunc {

/// Top occupied y index of every (x, z) column, -1 for empty columns.
/// Indexed heights(x, z).
Eigen::MatrixXi heightmap(const VoxelGrid& grid);

/// Cube dropped onto the shape from above.
struct CubeProbe {
    double side = 0.4642;  // metres; a cube of 0.1 m^3
    double mass = 1.0;     // kg
    int flatness_tol = 1;  // voxels
};

struct SupportabilityMap {
    int grid_dim = 0;
    int footprint = 0;  // probe side in voxels
    /// supported(px, pz): probe footprint covering columns
    /// [px, px + footprint) x [pz, pz + footprint).
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> supported;

    int supported_count() const { return int(supported.count()); }
};

/// Probe side in voxels: round(side / voxel size), at least 1.
int footprint_voxels(const VoxelGrid& grid, const CubeProbe& probe);

/// Quasi-static cube-drop test at every footprint position. The cube comes to
/// rest on the highest column under it; columns within flatness_tol of that
/// height are contacts. A position is supported when the contact column
/// centers span a polygon containing the footprint center (boundary counts)
/// and all occupied columns under the footprint lie within flatness_tol of
/// each other. A one-column footprint is supported by any occupied column.
SupportabilityMap supportability_test(const VoxelGrid& grid, const CubeProbe& probe = {});

struct ContainabilityResult {
    int spheres_placed = 0;
    double contained_volume = 0;     // m^3
    double bounding_box_volume = 0;  // m^3, occupied voxels
    double ratio = 0;
    std::vector<Eigen::Vector3d> centers;  // physical sphere centers
};

/// 1/16 of the grid's physical edge.
double default_sphere_radius(const VoxelGrid& grid);

/// Drops spheres one at a time. Each sphere is released above every lateral
/// position of a half-voxel lattice inside the occupied bounding box shrunk
/// by the radius, falls straight down onto column tops and earlier spheres,
/// and the lowest resting pose wins (ties: lowest x, then z). Positions with
/// nothing underneath are skipped. Filling stops once the best resting
/// center would lie above the top face of the highest occupied voxel.
ContainabilityResult containability_test(const VoxelGrid& grid, double sphere_radius);

// Rows are z, columns are x.
nlohmann::json to_json(const SupportabilityMap& map);
nlohmann::json to_json(const ContainabilityResult& result);

/// Plain PGM (P2), white where supported; rows are z, columns are x.
void write_pgm(std::ostream& out, const SupportabilityMap& map);

}  // namespace formfunc
