#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "formfunc/affordlab/affordlab.hpp"

using namespace formfunc;

namespace {

// 1 m voxels so probe sides and radii read directly in voxels.
VoxelGrid unit_grid(int dim) { return VoxelGrid(dim, double(dim)); }

CubeProbe probe_of(int side, int tol = 1) {
    CubeProbe p;
    p.side = side;
    p.flatness_tol = tol;
    return p;
}

void fill_box(VoxelGrid& g, int x0, int x1, int y0, int y1, int z0, int z1) {
    for (int y = y0; y < y1; ++y)
        for (int z = z0; z < z1; ++z)
            for (int x = x0; x < x1; ++x) g(x, y, z) = 1;
}

long cross(const Eigen::Vector2i& o, const Eigen::Vector2i& a, const Eigen::Vector2i& b) {
    return long(a.x() - o.x()) * (b.y() - o.y()) - long(a.y() - o.y()) * (b.x() - o.x());
}

// Carathéodory: a point lies in the hull of a planar set iff it lies in a
// non-degenerate triangle of three of its points.
bool in_some_triangle(const std::vector<Eigen::Vector2i>& pts, const Eigen::Vector2i& c) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            for (std::size_t k = j + 1; k < pts.size(); ++k) {
                const long area = cross(pts[i], pts[j], pts[k]);
                if (area == 0) continue;
                const long a = cross(pts[i], pts[j], c), b = cross(pts[j], pts[k], c), d = cross(pts[k], pts[i], c);
                if (area > 0 ? (a >= 0 && b >= 0 && d >= 0) : (a <= 0 && b <= 0 && d <= 0)) return true;
            }
    return false;
}

}  // namespace

TEST_CASE("heightmap") {
    VoxelGrid g = unit_grid(4);
    g(1, 0, 2) = 1;
    g(1, 2, 2) = 1;
    const Eigen::MatrixXi h = heightmap(g);
    CHECK(h(1, 2) == 2);
    CHECK(h(0, 0) == -1);
    CHECK((h.array() >= 0).count() == 1);
}

TEST_CASE("probe footprint in voxels") {
    VoxelGrid desk(32, 2.0);
    CHECK(footprint_voxels(desk, CubeProbe{}) == 7);  // 0.4642 / 0.0625 = 7.43
    CubeProbe tiny;
    tiny.side = 1e-6;
    CHECK(footprint_voxels(desk, tiny) == 1);
    tiny.side = 2.5;
    CHECK(footprint_voxels(unit_grid(8), tiny) == 3);  // rounds half away from zero
    CubeProbe bad;
    bad.side = -1;
    CHECK_THROWS_AS(footprint_voxels(desk, bad), Error);
    CHECK_THROWS_AS(footprint_voxels(desk, probe_of(0)), Error);
    CHECK_THROWS_AS(supportability_test(unit_grid(4), probe_of(5)), Error);
}

TEST_CASE("a flat slab supports the cube everywhere") {
    VoxelGrid g = unit_grid(12);
    fill_box(g, 0, 12, 4, 6, 0, 12);
    for (int f : {1, 2, 3, 5, 12}) {
        const auto map = supportability_test(g, probe_of(f));
        CHECK(map.footprint == f);
        CHECK(map.supported.rows() == 13 - f);
        CHECK(map.supported_count() == (13 - f) * (13 - f));
    }
}

TEST_CASE("a spike does not support the cube") {
    VoxelGrid spike = unit_grid(10);
    fill_box(spike, 4, 5, 0, 9, 4, 5);
    CHECK(supportability_test(spike, probe_of(3)).supported_count() == 0);
    CHECK(supportability_test(spike, probe_of(1)).supported_count() == 1);

    // On a slab, every footprint touching the spike fails the flatness check.
    VoxelGrid g = unit_grid(10);
    fill_box(g, 0, 10, 0, 2, 0, 10);
    fill_box(g, 4, 5, 2, 8, 4, 5);
    const auto map = supportability_test(g, probe_of(3));
    for (int pz = 0; pz < 8; ++pz)
        for (int px = 0; px < 8; ++px) {
            const bool covers = px <= 4 && 4 < px + 3 && pz <= 4 && 4 < pz + 3;
            CHECK(bool(map.supported(px, pz)) == !covers);
        }
}

TEST_CASE("contacts must surround the footprint center") {
    // Two tall columns on one edge of an otherwise empty footprint: collinear contacts.
    VoxelGrid g = unit_grid(6);
    fill_box(g, 0, 3, 3, 4, 0, 1);
    CHECK_FALSE(supportability_test(g, probe_of(3, 0)).supported(0, 0));
    // Three corners span a triangle whose hypotenuse passes through the center: boundary counts.
    VoxelGrid tri = unit_grid(6);
    tri(0, 3, 0) = tri(2, 3, 0) = tri(0, 3, 2) = 1;
    CHECK(supportability_test(tri, probe_of(3, 0)).supported(0, 0));
    // Two adjacent corners plus the middle of the opposite edge enclose it strictly.
    VoxelGrid off = unit_grid(6);
    off(0, 3, 0) = off(1, 3, 0) = off(0, 3, 1) = 1;
    CHECK_FALSE(supportability_test(off, probe_of(3, 0)).supported(0, 0));
}

TEST_CASE("supportability agrees with a triangle-containment oracle on random terrain") {
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> height(-1, 4);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 8, f = 2 + trial % 4, tol = trial % 3;
        VoxelGrid g = unit_grid(d);
        Eigen::MatrixXi h(d, d);
        for (int z = 0; z < d; ++z)
            for (int x = 0; x < d; ++x) {
                h(x, z) = height(rng);
                if (h(x, z) >= 0) g(x, h(x, z), z) = 1;  // floating columns: only the top matters
            }
        const auto map = supportability_test(g, probe_of(f, tol));
        for (int pz = 0; pz + f <= d; ++pz)
            for (int px = 0; px + f <= d; ++px) {
                int top = -1, low = 1 << 20;
                for (int j = 0; j < f; ++j)
                    for (int i = 0; i < f; ++i)
                        if (h(px + i, pz + j) >= 0) {
                            top = std::max(top, h(px + i, pz + j));
                            low = std::min(low, h(px + i, pz + j));
                        }
                bool expected = false;
                if (top >= 0 && top - low <= tol) {
                    std::vector<Eigen::Vector2i> contacts;
                    for (int j = 0; j < f; ++j)
                        for (int i = 0; i < f; ++i)
                            if (h(px + i, pz + j) >= top - tol)
                                contacts.emplace_back(2 * (px + i) + 1, 2 * (pz + j) + 1);
                    expected = in_some_triangle(contacts, Eigen::Vector2i(2 * px + f, 2 * pz + f));
                }
                REQUIRE(bool(map.supported(px, pz)) == expected);
            }
    }
}

TEST_CASE("supportability follows quarter turns and ignores hidden voxels") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> height(-1, 5), coin(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 9, f = 2 + trial % 3;
        VoxelGrid g = unit_grid(d);
        for (int z = 0; z < d; ++z)
            for (int x = 0; x < d; ++x)
                if (const int h = height(rng); h >= 0) g(x, h, z) = 1;
        const auto map = supportability_test(g, probe_of(f));
        const int P = d - f + 1;
        for (const auto turns : {QuarterTurns::k90, QuarterTurns::k180, QuarterTurns::k270}) {
            const auto rotated = supportability_test(rotate_quarter(g, turns), probe_of(f));
            for (int pz = 0; pz < P; ++pz)
                for (int px = 0; px < P; ++px) {
                    const Eigen::Vector2i r = rotate_index(P, px, pz, turns);
                    REQUIRE(rotated.supported(r.x(), r.y()) == map.supported(px, pz));
                }
        }
        // Filling below the top surface leaves the map unchanged.
        VoxelGrid filled = g;
        const Eigen::MatrixXi h = heightmap(g);
        for (int z = 0; z < d; ++z)
            for (int x = 0; x < d; ++x)
                for (int y = 0; y < h(x, z); ++y)
                    if (coin(rng) == 0) filled(x, y, z) = 1;
        CHECK((supportability_test(filled, probe_of(f)).supported == map.supported).all());
        CHECK((supportability_test(g, probe_of(f)).supported == map.supported).all());
    }
}

TEST_CASE("fewer spheres fit as the radius grows in nested cavities") {
    VoxelGrid g = unit_grid(16);
    fill_box(g, 1, 15, 0, 1, 1, 15);
    for (int y = 1; y < 8; ++y)
        for (int z = 1; z < 15; ++z)
            for (int x = 1; x < 15; ++x)
                if (x == 1 || x == 14 || z == 1 || z == 14) g(x, y, z) = 1;
    // An inner well sunk into a raised floor.
    fill_box(g, 2, 14, 1, 3, 2, 14);
    for (int y = 1; y < 3; ++y)
        for (int z = 6; z < 10; ++z)
            for (int x = 6; x < 10; ++x) g(x, y, z) = 0;
    // The ratio itself is not monotone: packing density depends on how the
    // radius fits the cavity (1.25 -> 0.214, 1.5 -> 0.216 here).
    int previous = 1 << 30;
    for (const double radius : {0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 5.5, 7.0}) {
        const auto r = containability_test(g, radius);
        CHECK(r.spheres_placed <= previous);
        previous = r.spheres_placed;
        CHECK(containability_test(g, radius).centers == r.centers);
        if (radius > 6) CHECK(r.ratio == 0);
    }
}

TEST_CASE("a solid cube contains nothing") {
    VoxelGrid g = unit_grid(12);
    fill_box(g, 2, 10, 2, 10, 2, 10);
    const auto r = containability_test(g, 1.0);
    CHECK(r.spheres_placed == 0);
    CHECK(r.ratio == 0);
    CHECK(r.bounding_box_volume == doctest::Approx(512.0));
}

TEST_CASE("a unit cavity holds exactly one sphere") {
    // 4x4 footprint, floor one voxel thick, walls two voxels high: a 2x2x2 hole.
    VoxelGrid g = unit_grid(8);
    fill_box(g, 0, 4, 0, 1, 0, 4);
    for (int y = 1; y < 3; ++y)
        for (int z = 0; z < 4; ++z)
            for (int x = 0; x < 4; ++x)
                if (x == 0 || x == 3 || z == 0 || z == 3) g(x, y, z) = 1;
    const auto r = containability_test(g, 1.0);
    REQUIRE(r.spheres_placed == 1);
    CHECK(r.centers[0].isApprox(Eigen::Vector3d(2, 2, 2)));
    CHECK(r.ratio == doctest::Approx(4.0 / 3.0 * std::numbers::pi / 48.0));
}

TEST_CASE("a cavity two diameters square and one deep packs four spheres") {
    VoxelGrid g = unit_grid(8);
    fill_box(g, 0, 6, 0, 1, 0, 6);
    for (int y = 1; y < 3; ++y)
        for (int z = 0; z < 6; ++z)
            for (int x = 0; x < 6; ++x)
                if (x == 0 || x == 5 || z == 0 || z == 5) g(x, y, z) = 1;
    const auto r = containability_test(g, 1.0);
    REQUIRE(r.spheres_placed == 4);
    for (const auto& c : r.centers) {
        CHECK(c.y() == doctest::Approx(2));
        CHECK((c.x() == doctest::Approx(2) || c.x() == doctest::Approx(4)));
        CHECK((c.z() == doctest::Approx(2) || c.z() == doctest::Approx(4)));
    }
    CHECK(r.bounding_box_volume == doctest::Approx(108.0));
    CHECK(r.ratio == doctest::Approx(4 * 4.0 / 3.0 * std::numbers::pi / 108.0));
}

TEST_CASE("spheres in an open tub rest without overlap below the rim") {
    VoxelGrid g = unit_grid(16);
    fill_box(g, 2, 14, 0, 1, 3, 13);
    for (int y = 1; y < 6; ++y)
        for (int z = 3; z < 13; ++z)
            for (int x = 2; x < 14; ++x)
                if (x == 2 || x == 13 || z == 3 || z == 12) g(x, y, z) = 1;
    const double R = 1.0;
    const auto r = containability_test(g, R);
    CHECK(r.spheres_placed > 4);
    CHECK(r.ratio > 0);
    CHECK(r.ratio < 1);
    for (std::size_t i = 0; i < r.centers.size(); ++i) {
        const auto& c = r.centers[i];
        CHECK(c.y() <= 6 + 1e-9);
        for (std::size_t j = 0; j < i; ++j) REQUIRE((c - r.centers[j]).norm() >= 2 * R - 1e-6);
        for (int y = 0; y < 16; ++y)
            for (int z = 0; z < 16; ++z)
                for (int x = 0; x < 16; ++x) {
                    if (!g(x, y, z)) continue;
                    const Eigen::Vector3d lo(x, y, z), hi = lo.array() + 1;
                    const Eigen::Vector3d nearest = c.cwiseMax(lo).cwiseMin(hi);
                    REQUIRE((c - nearest).norm() >= R - 1e-6);
                }
    }
    // A larger default radius still fits, and is scale / 16.
    CHECK(default_sphere_radius(g) == 1.0);
}

TEST_CASE("containability edge cases") {
    const auto empty = containability_test(unit_grid(4), 1.0);
    CHECK(empty.spheres_placed == 0);
    CHECK(empty.ratio == 0);
    CHECK_THROWS_AS(containability_test(unit_grid(4), 0.0), Error);
}

TEST_CASE("supportability map serializations") {
    VoxelGrid g = unit_grid(4);
    fill_box(g, 0, 2, 0, 1, 0, 4);
    const auto map = supportability_test(g, probe_of(1));
    const auto j = to_json(map);
    CHECK(j["supported_count"] == 8);
    REQUIRE(j["supported"].size() == 4);  // rows are z
    CHECK(j["supported"][3] == nlohmann::json::array({true, true, false, false}));
    std::ostringstream pgm;
    write_pgm(pgm, map);
    CHECK(pgm.str() == "P2\n4 4\n255\n255 255 0 0\n255 255 0 0\n255 255 0 0\n255 255 0 0\n");
}
