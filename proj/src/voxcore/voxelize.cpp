#include "formfunc/voxcore/voxelize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace formfunc {

namespace {

// Projects the triangle and the box onto `axis`; true if the intervals are disjoint.
bool separated(const Eigen::Vector3d& axis, const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
               const Eigen::Vector3d& v2, const Eigen::Vector3d& half) {
    const double p0 = axis.dot(v0), p1 = axis.dot(v1), p2 = axis.dot(v2);
    const double r = half.dot(axis.cwiseAbs());
    const double lo = std::min({p0, p1, p2}), hi = std::max({p0, p1, p2});
    return lo > r || hi < -r;
}

}  // namespace

bool triangle_box_overlap(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                          const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                          const Eigen::Vector3d& c) {
    const Eigen::Vector3d center = 0.5 * (lo + hi);
    const Eigen::Vector3d half = 0.5 * (hi - lo);
    const Eigen::Vector3d v0 = a - center, v1 = b - center, v2 = c - center;

    // Box face normals.
    for (int k = 0; k < 3; ++k) {
        const double mn = std::min({v0[k], v1[k], v2[k]}), mx = std::max({v0[k], v1[k], v2[k]});
        if (mn > half[k] || mx < -half[k]) return false;
    }

    const Eigen::Vector3d e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;

    // Triangle plane.
    const Eigen::Vector3d normal = e0.cross(e1);
    if (normal.squaredNorm() > 0 && separated(normal, v0, v1, v2, half)) return false;

    // Edge x box-axis cross products.
    for (const Eigen::Vector3d& edge : {e0, e1, e2}) {
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector3d axis = edge.cross(Eigen::Vector3d::Unit(k));
            if (axis.squaredNorm() == 0) continue;
            if (separated(axis, v0, v1, v2, half)) return false;
        }
    }
    return true;
}

VoxelGrid voxelize(const TriMesh& mesh, int dim, const VoxelizeOptions& options) {
    if (dim < 1) throw ShapeError("voxelize: dim must be >= 1");
    validate(mesh);
    if (mesh.empty()) return VoxelGrid(dim);

    const auto [lo, hi] = bounds(mesh);
    const double extent = (hi - lo).maxCoeff();
    if (!(extent > 0)) throw ShapeError("voxelize: degenerate mesh bounding box");

    const double physical_edge = extent / options.fill_ratio;
    const Eigen::Vector3d center = 0.5 * (lo + hi);
    VoxelGrid grid(dim, physical_edge, center - Eigen::Vector3d::Constant(0.5 * physical_edge));

    const double to_voxel = dim / physical_edge;
    std::vector<Eigen::Vector3d> local(mesh.vertices.size());
    std::transform(mesh.vertices.begin(), mesh.vertices.end(), local.begin(),
                   [&](const Eigen::Vector3d& v) { return Eigen::Vector3d((v - grid.translate) * to_voxel); });

    const double top = 1.0 - kCellEpsilon;
    for (const auto& t : mesh.triangles) {
        const Eigen::Vector3d& a = local[std::size_t(t[0])];
        const Eigen::Vector3d& b = local[std::size_t(t[1])];
        const Eigen::Vector3d& c = local[std::size_t(t[2])];
        const Eigen::Vector3d tmin = a.cwiseMin(b).cwiseMin(c);
        const Eigen::Vector3d tmax = a.cwiseMax(b).cwiseMax(c);
        Eigen::Vector3i first, last;
        for (int k = 0; k < 3; ++k) {
            first[k] = std::clamp(int(std::floor(tmin[k] - top)), 0, dim - 1);
            last[k] = std::clamp(int(std::floor(tmax[k])), 0, dim - 1);
        }
        for (int y = first.y(); y <= last.y(); ++y)
            for (int z = first.z(); z <= last.z(); ++z)
                for (int x = first.x(); x <= last.x(); ++x) {
                    if (grid(x, y, z)) continue;
                    const Eigen::Vector3d cell(x, y, z);
                    if (triangle_box_overlap(cell, cell.array() + top, a, b, c)) grid(x, y, z) = 1;
                }
    }

    return options.fill_interior ? fill_enclosed(grid) : grid;
}

VoxelGrid fill_enclosed(const VoxelGrid& shell) {
    validate(shell);
    const int d = shell.dim;
    std::vector<std::uint8_t> outside(std::size_t(shell.voxel_count()), 0);
    std::deque<Eigen::Vector3i> queue;
    auto seed = [&](int x, int y, int z) {
        const auto i = std::size_t(shell.index(x, y, z));
        if (!shell(x, y, z) && !outside[i]) {
            outside[i] = 1;
            queue.emplace_back(x, y, z);
        }
    };
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            seed(0, a, b), seed(d - 1, a, b);
            seed(a, 0, b), seed(a, d - 1, b);
            seed(a, b, 0), seed(a, b, d - 1);
        }
    const Eigen::Vector3i steps[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    while (!queue.empty()) {
        const Eigen::Vector3i p = queue.front();
        queue.pop_front();
        for (const auto& s : steps) {
            const Eigen::Vector3i q = p + s;
            if (shell.contains(q.x(), q.y(), q.z())) seed(q.x(), q.y(), q.z());
        }
    }
    VoxelGrid filled = shell;
    for (Eigen::Index i = 0; i < filled.values.size(); ++i)
        if (!outside[std::size_t(i)]) filled.values[i] = 1;
    return filled;
}

}  // namespace formfunc
