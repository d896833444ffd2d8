#include "formfunc/voxcore/marching_cubes.hpp"

#include <unordered_map>

#include "formfunc/voxcore/mc_tables.hpp"

namespace formfunc {

namespace {

// Corner offsets and edge endpoints in the lookup tables' numbering.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
                               {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

TriMesh marching_cubes_field(const Eigen::VectorXd& values, int dim, const Eigen::Vector3d& translate,
                             double scale, double iso) {
    const int n = dim + 2;  // lattice points per axis after zero padding
    auto sample = [&](int px, int py, int pz) -> double {
        const int x = px - 1, y = py - 1, z = pz - 1;
        if (x < 0 || y < 0 || z < 0 || x >= dim || y >= dim || z >= dim) return 0.0;
        return values[x + Eigen::Index(dim) * (z + Eigen::Index(dim) * y)];
    };
    const double h = scale / dim;
    auto position = [&](const Eigen::Vector3d& p) -> Eigen::Vector3d {
        return translate + ((p.array() - 0.5) * h).matrix();
    };

    TriMesh mesh;
    std::unordered_map<std::int64_t, int> welded;
    auto lattice_id = [&](int px, int py, int pz) -> std::int64_t {
        return px + std::int64_t(n) * (pz + std::int64_t(n) * py);
    };

    double corner[8];
    int edge_vertex[12];
    for (int py = 0; py + 1 < n; ++py)
        for (int pz = 0; pz + 1 < n; ++pz)
            for (int px = 0; px + 1 < n; ++px) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    corner[c] = sample(px + kCorner[c][0], py + kCorner[c][1], pz + kCorner[c][2]);
                    if (corner[c] < iso) cube |= 1 << c;
                }
                const int edges = mc::kEdgeTable[cube];
                if (edges == 0) continue;

                for (int e = 0; e < 12; ++e) {
                    if (!(edges & (1 << e))) continue;
                    int a = kEdge[e][0], b = kEdge[e][1];
                    Eigen::Vector3i pa(px + kCorner[a][0], py + kCorner[a][1], pz + kCorner[a][2]);
                    Eigen::Vector3i pb(px + kCorner[b][0], py + kCorner[b][1], pz + kCorner[b][2]);
                    if ((pb - pa).sum() < 0) {
                        std::swap(a, b);
                        std::swap(pa, pb);
                    }
                    int axis = 0;
                    while (pb[axis] == pa[axis]) ++axis;
                    const std::int64_t key = 3 * lattice_id(pa.x(), pa.y(), pa.z()) + axis;
                    auto [it, inserted] = welded.try_emplace(key, int(mesh.vertices.size()));
                    if (inserted) {
                        const double t = (iso - corner[a]) / (corner[b] - corner[a]);
                        const Eigen::Vector3d p = pa.cast<double>() + t * (pb - pa).cast<double>();
                        mesh.vertices.push_back(position(p));
                    }
                    edge_vertex[e] = it->second;
                }

                for (const int* t = mc::kTriTable[cube]; *t != -1; t += 3)
                    mesh.triangles.emplace_back(edge_vertex[t[0]], edge_vertex[t[2]], edge_vertex[t[1]]);
            }
    return mesh;
}

double enclosed_volume(const TriMesh& mesh) {
    double six_v = 0;
    for (const auto& t : mesh.triangles) {
        const auto& a = mesh.vertices[std::size_t(t[0])];
        const auto& b = mesh.vertices[std::size_t(t[1])];
        const auto& c = mesh.vertices[std::size_t(t[2])];
        six_v += a.dot(b.cross(c));
    }
    return six_v / 6.0;
}

}  // namespace formfunc
