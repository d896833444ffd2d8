#pragma once

#include "formfunc/voxcore/grid.hpp"
#include "formfunc/voxcore/mesh.hpp"

namespace formfunc {

struct VoxelizeOptions {
    /// Fraction of the cube edge the longest bounding-box side is scaled to.
    double fill_ratio = 0.9;
    /// Also mark cells enclosed by the surface shell.
    bool fill_interior = false;
};

/// Surface voxelization: a cell is occupied iff some triangle intersects it.
///
/// The mesh is scaled uniformly and centered so its bounding box spans
/// `fill_ratio` of the cube edge along its longest side. Cells are treated
/// as half-open [i, i+1) so a face lying exactly on a cell boundary belongs
/// to the upper cell only. The returned translate/scale map voxel indices
/// back to the mesh's coordinate frame.
VoxelGrid voxelize(const TriMesh& mesh, int dim, const VoxelizeOptions& options = {});

/// Separating-axis overlap test between a triangle and the closed box
/// [lo, hi]; touching counts as overlap.
bool triangle_box_overlap(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                          const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                          const Eigen::Vector3d& c);

/// Upper cell bound used by voxelize in voxel units: cell i spans
/// [i, i + 1 - kCellEpsilon].
inline constexpr double kCellEpsilon = 1e-9;

/// Marks every empty cell not 6-connected to the grid border as occupied.
VoxelGrid fill_enclosed(const VoxelGrid& shell);

}  // namespace formfunc
