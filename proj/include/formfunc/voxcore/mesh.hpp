#pragma once

#include <istream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace formfunc {

/// Indexed triangle mesh, vertices in meters.
struct TriMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3i> triangles;

    bool empty() const { return triangles.empty(); }
};

/// Throws ShapeError on out-of-range or repeated triangle indices.
void validate(const TriMesh& mesh);

/// Axis-aligned bounds of the vertex set; {min, max}.
std::pair<Eigen::Vector3d, Eigen::Vector3d> bounds(const TriMesh& mesh);

/// Parses an OFF document. Faces with more than three vertices are
/// fan-triangulated from their first vertex. Errors are ParseErrors that
/// carry the offending line number.
TriMesh parse_off(std::istream& in);
TriMesh parse_off_string(const std::string& text);

/// Wavefront OBJ text for the mesh (1-based indices).
std::string to_obj(const TriMesh& mesh);

}  // namespace formfunc
