#pragma once

#include "formfunc/voxcore/grid.hpp"
#include "formfunc/voxcore/mesh.hpp"

namespace formfunc {

/// Iso-surface of a voxel field sampled at voxel centers.
///
/// The field is padded with one layer of zeros on every side before the
/// 256-case lookup runs, so the result is closed even where the shape
/// touches the grid border. Vertices shared by neighbouring cells are
/// welded (one vertex per crossed lattice edge) and placed by linear
/// interpolation, in physical coordinates. Triangles wind counter-clockwise
/// seen from outside (values below `iso`).
TriMesh marching_cubes_field(const Eigen::VectorXd& values, int dim, const Eigen::Vector3d& translate,
                             double scale, double iso);

template <typename Scalar>
TriMesh marching_cubes(const Grid<Scalar>& grid, double iso = 0.5) {
    validate(grid);
    if (!(iso > 0 && iso < 1)) throw ShapeError("marching_cubes: iso must lie in (0, 1)");
    return marching_cubes_field(grid.values.template cast<double>(), grid.dim, grid.translate, grid.scale, iso);
}

/// Signed volume enclosed by a closed, consistently wound mesh.
double enclosed_volume(const TriMesh& mesh);

}  // namespace formfunc
