#include "formfunc/affordlab/affordlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace formfunc {

Eigen::MatrixXi heightmap(const VoxelGrid& grid) {
    validate(grid);
    const int d = grid.dim;
    Eigen::MatrixXi h = Eigen::MatrixXi::Constant(d, d, -1);
    for (int y = 0; y < d; ++y)
        for (int z = 0; z < d; ++z)
            for (int x = 0; x < d; ++x)
                if (grid(x, y, z)) h(x, z) = y;
    return h;
}

int footprint_voxels(const VoxelGrid& grid, const CubeProbe& probe) {
    if (!(probe.side > 0)) throw Error("cube probe side must be > 0");
    if (!(probe.mass > 0)) throw Error("cube probe mass must be > 0");
    if (probe.flatness_tol < 0) throw Error("cube probe flatness_tol must be >= 0");
    return std::max(1, int(std::lround(probe.side / grid.voxel_size())));
}

namespace {

using Point = Eigen::Vector2i;

long cross(const Point& o, const Point& a, const Point& b) {
    return long(a.x() - o.x()) * (b.y() - o.y()) - long(a.y() - o.y()) * (b.x() - o.x());
}

/// Counter-clockwise hull without collinear points (monotone chain).
std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(),
              [](const Point& a, const Point& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Point inside a counter-clockwise polygon of >= 3 vertices, edges included.
bool contains(const std::vector<Point>& hull, const Point& p) {
    for (std::size_t i = 0; i < hull.size(); ++i)
        if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0) return false;
    return true;
}

}  // namespace

SupportabilityMap supportability_test(const VoxelGrid& grid, const CubeProbe& probe) {
    const int f = footprint_voxels(grid, probe);
    const int d = grid.dim;
    if (f > d) throw Error("cube probe footprint (" + std::to_string(f) + " voxels) exceeds the grid");
    const Eigen::MatrixXi h = heightmap(grid);
    const int tol = probe.flatness_tol;

    SupportabilityMap map;
    map.grid_dim = d;
    map.footprint = f;
    map.supported.setConstant(d - f + 1, d - f + 1, false);
    std::vector<Point> contact;
    for (int pz = 0; pz + f <= d; ++pz)
        for (int px = 0; px + f <= d; ++px) {
            const auto block = h.block(px, pz, f, f);
            const int top = block.maxCoeff();
            if (top < 0) continue;
            int low = top;
            for (int j = 0; j < f; ++j)
                for (int i = 0; i < f; ++i)
                    if (block(i, j) >= 0) low = std::min(low, block(i, j));
            if (top - low > tol) continue;
            if (f == 1) {
                map.supported(px, pz) = true;
                continue;
            }
            // Doubled coordinates keep column centers and the footprint center integral.
            contact.clear();
            for (int j = 0; j < f; ++j)
                for (int i = 0; i < f; ++i)
                    if (block(i, j) >= top - tol) contact.emplace_back(2 * (px + i) + 1, 2 * (pz + j) + 1);
            const auto hull = convex_hull(contact);
            map.supported(px, pz) = hull.size() >= 3 && contains(hull, Point(2 * px + f, 2 * pz + f));
        }
    return map;
}

double default_sphere_radius(const VoxelGrid& grid) { return grid.scale / 16.0; }

ContainabilityResult containability_test(const VoxelGrid& grid, double sphere_radius) {
    validate(grid);
    if (!(sphere_radius > 0)) throw Error("sphere radius must be > 0");
    ContainabilityResult result;
    const int d = grid.dim;
    const Eigen::MatrixXi h = heightmap(grid);

    // Occupied bounding box in voxel units.
    int lo[3] = {d, d, d}, hi[3] = {-1, -1, -1};
    for (int y = 0; y < d; ++y)
        for (int z = 0; z < d; ++z)
            for (int x = 0; x < d; ++x)
                if (grid(x, y, z)) {
                    const int p[3] = {x, y, z};
                    for (int a = 0; a < 3; ++a) lo[a] = std::min(lo[a], p[a]), hi[a] = std::max(hi[a], p[a] + 1);
                }
    if (hi[0] < 0) return result;
    const double s = grid.voxel_size();
    result.bounding_box_volume = double(hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]) * s * s * s;

    const double R = sphere_radius / s;
    const double overflow = hi[1];
    constexpr double kSlack = 1e-9;

    std::vector<double> xs, zs;
    for (int i = int(std::ceil(2 * (lo[0] + R) - kSlack)); i <= int(std::floor(2 * (hi[0] - R) + kSlack)); ++i)
        xs.push_back(0.5 * i);
    for (int i = int(std::ceil(2 * (lo[2] + R) - kSlack)); i <= int(std::floor(2 * (hi[2] - R) + kSlack)); ++i)
        zs.push_back(0.5 * i);

    // Resting height on the voxel columns alone, per candidate.
    const double none = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd floor_rest = Eigen::MatrixXd::Constant(Eigen::Index(xs.size()), Eigen::Index(zs.size()), none);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < zs.size(); ++j) {
            const double cx = xs[i], cz = zs[j];
            double best = none;
            for (int x = std::max(0, int(std::floor(cx - R))); x <= std::min(d - 1, int(std::ceil(cx + R))); ++x)
                for (int z = std::max(0, int(std::floor(cz - R))); z <= std::min(d - 1, int(std::ceil(cz + R))); ++z) {
                    if (h(x, z) < 0) continue;
                    const double dx = std::max({x - cx, 0.0, cx - (x + 1)});
                    const double dz = std::max({z - cz, 0.0, cz - (z + 1)});
                    const double dd = dx * dx + dz * dz;
                    if (dd >= (R - kSlack) * (R - kSlack)) continue;
                    best = std::max(best, h(x, z) + 1 + std::sqrt(R * R - dd));
                }
            floor_rest(Eigen::Index(i), Eigen::Index(j)) = best;
        }

    std::vector<Eigen::Vector3d> spheres;  // voxel units
    const double reach = 2 * R - kSlack;
    for (;;) {
        double best_y = std::numeric_limits<double>::infinity();
        Eigen::Vector3d best;
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = 0; j < zs.size(); ++j) {
                double y = floor_rest(Eigen::Index(i), Eigen::Index(j));
                for (const auto& c : spheres) {
                    const double dx = c.x() - xs[i], dz = c.z() - zs[j];
                    const double dd = dx * dx + dz * dz;
                    if (dd < reach * reach) y = std::max(y, c.y() + std::sqrt(4 * R * R - dd));
                }
                if (y == none) continue;
                if (y < best_y) best_y = y, best = Eigen::Vector3d(xs[i], y, zs[j]);
            }
        if (!(best_y <= overflow)) break;
        spheres.push_back(best);
    }

    result.spheres_placed = int(spheres.size());
    for (const auto& c : spheres) result.centers.push_back(grid.translate + c * s);
    result.contained_volume = spheres.size() * 4.0 / 3.0 * std::numbers::pi * std::pow(sphere_radius, 3);
    result.ratio = result.contained_volume / result.bounding_box_volume;
    return result;
}

nlohmann::json to_json(const SupportabilityMap& map) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index z = 0; z < map.supported.cols(); ++z) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index x = 0; x < map.supported.rows(); ++x) row.push_back(bool(map.supported(x, z)));
        rows.push_back(row);
    }
    return {{"grid_dim", map.grid_dim},
            {"footprint", map.footprint},
            {"supported_count", map.supported_count()},
            {"supported", rows}};
}

nlohmann::json to_json(const ContainabilityResult& r) {
    return {{"spheres_placed", r.spheres_placed},
            {"contained_volume", r.contained_volume},
            {"bounding_box_volume", r.bounding_box_volume},
            {"ratio", r.ratio}};
}

void write_pgm(std::ostream& out, const SupportabilityMap& map) {
    out << "P2\n" << map.supported.rows() << ' ' << map.supported.cols() << "\n255\n";
    for (Eigen::Index z = 0; z < map.supported.cols(); ++z) {
        for (Eigen::Index x = 0; x < map.supported.rows(); ++x)
            out << (x ? " " : "") << (map.supported(x, z) ? 255 : 0);
        out << '\n';
    }
}

}  // namespace formfunc
