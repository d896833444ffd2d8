#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "formfunc/error.hpp"

namespace formfunc {

/// Cubic volume of per-voxel values with its physical placement.
///
/// Storage order is x fastest, then z, then y, the same order binvox data is
/// serialized in. The y index is the vertical axis. A voxel (x, y, z) covers
/// the physical box translate + [x, x+1) * scale / dim on each axis.
template <typename Scalar>
struct Grid {
    using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    int dim = 0;
    Values values;
    Eigen::Vector3d translate = Eigen::Vector3d::Zero();
    double scale = 1.0;

    Grid() = default;

    explicit Grid(int edge, double physical_edge = 1.0,
                  const Eigen::Vector3d& offset = Eigen::Vector3d::Zero())
        : dim(edge), translate(offset), scale(physical_edge) {
        if (edge < 1) throw ShapeError("grid dim must be >= 1");
        if (!(physical_edge > 0)) throw ShapeError("grid scale must be > 0");
        values = Values::Zero(voxel_count());
    }

    Eigen::Index voxel_count() const {
        return Eigen::Index(dim) * dim * dim;
    }

    Eigen::Index index(int x, int y, int z) const {
        return x + Eigen::Index(dim) * (z + Eigen::Index(dim) * y);
    }

    bool contains(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dim && y < dim && z < dim;
    }

    Scalar& operator()(int x, int y, int z) { return values[index(x, y, z)]; }
    Scalar operator()(int x, int y, int z) const { return values[index(x, y, z)]; }

    double voxel_size() const { return scale / dim; }

    /// Physical position of the center of voxel (x, y, z).
    Eigen::Vector3d center(int x, int y, int z) const {
        return translate + (Eigen::Vector3d(x, y, z).array() + 0.5).matrix() * voxel_size();
    }

    /// Same placement and dim, different payload type.
    template <typename Other>
    Grid<Other> cast() const {
        Grid<Other> out;
        out.dim = dim;
        out.values = values.template cast<Other>();
        out.translate = translate;
        out.scale = scale;
        return out;
    }

    bool operator==(const Grid& other) const {
        return dim == other.dim && translate == other.translate && scale == other.scale &&
               values.size() == other.values.size() && values == other.values;
    }
};

/// Binary occupancy volume (0 = empty, 1 = occupied).
using VoxelGrid = Grid<std::uint8_t>;
/// Real-valued occupancy, e.g. decoder output probabilities.
using ProbabilityGrid = Grid<float>;

/// Throws ShapeError unless the grid satisfies its size and scale invariants.
template <typename Scalar>
void validate(const Grid<Scalar>& grid) {
    if (grid.dim < 1) throw ShapeError("grid dim must be >= 1");
    if (!(grid.scale > 0)) throw ShapeError("grid scale must be > 0");
    if (grid.values.size() != grid.voxel_count())
        throw ShapeError("grid occupancy length does not match dim^3");
}

std::int64_t occupied_count(const VoxelGrid& grid);

/// Occupied voxels divided by dim^3.
double occupancy_fraction(const VoxelGrid& grid);

/// Binary grid with value 1 wherever probability >= threshold.
VoxelGrid threshold(const ProbabilityGrid& grid, float level = 0.5f);

/// Intersection over union of two equally sized binary grids; 1 when both are empty.
double iou(const VoxelGrid& a, const VoxelGrid& b);

enum class QuarterTurns : int { k0 = 0, k90 = 1, k180 = 2, k270 = 3 };

/// Rotates the occupancy about the vertical (y) axis.
///
/// One quarter turn sends index (x, z) to (dim-1-z, x); y is unchanged.
VoxelGrid rotate_quarter(const VoxelGrid& grid, QuarterTurns turns);

/// Index image of (x, z) under `turns` quarter turns.
Eigen::Vector2i rotate_index(int dim, int x, int z, QuarterTurns turns);

}  // namespace formfunc
