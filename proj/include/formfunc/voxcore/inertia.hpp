#pragma once

#include <string>

#include "formfunc/voxcore/grid.hpp"
#include "formfunc/voxcore/mesh.hpp"

namespace formfunc {

struct InertiaResult {
    double mass = 0;                                          // kg
    Eigen::Vector3d center_of_mass = Eigen::Vector3d::Zero();  // m
    Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();         // kg m^2, about center_of_mass
};

/// Rigid-body inertia of the occupied voxels, `mass` spread uniformly.
///
/// Each voxel is a solid cube: its own moment (m s^2 / 6 on the diagonal)
/// plus the parallel-axis term of its center relative to the center of mass.
InertiaResult inertia_of(const VoxelGrid& grid, double mass);

/// Gazebo SDF document for a single static-free model with one link whose
/// visual and collision geometry reference `mesh_uri`.
std::string export_sdf(const TriMesh& mesh, const InertiaResult& inertia, const std::string& name,
                       const std::string& mesh_uri);

}  // namespace formfunc
