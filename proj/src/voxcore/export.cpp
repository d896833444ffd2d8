#include <sstream>

#include "formfunc/voxcore/binvox.hpp"
#include "formfunc/voxcore/inertia.hpp"

namespace formfunc {

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string to_obj(const TriMesh& mesh) {
    std::ostringstream out;
    out << "# " << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " triangles\n";
    for (const auto& v : mesh.vertices)
        out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    return out.str();
}

std::string export_sdf(const TriMesh& mesh, const InertiaResult& inertia, const std::string& name,
                       const std::string& mesh_uri) {
    if (mesh.empty()) throw Error("export_sdf: mesh is empty");
    const Eigen::Matrix3d& I = inertia.inertia;
    const Eigen::Vector3d& c = inertia.center_of_mass;
    auto f = [](double v) { return format_double(v); };
    const std::string uri = xml_escape(mesh_uri);

    std::ostringstream out;
    out << "<?xml version=\"1.0\"?>\n"
        << "<sdf version=\"1.6\">\n"
        << "  <model name=\"" << xml_escape(name) << "\">\n"
        // Voxel grids are y-up; the simulator frame is z-up.
        << "    <pose>0 0 0 1.5707963267948966 0 0</pose>\n"
        << "    <link name=\"body\">\n"
        << "      <inertial>\n"
        << "        <pose>" << f(c.x()) << ' ' << f(c.y()) << ' ' << f(c.z()) << " 0 0 0</pose>\n"
        << "        <mass>" << f(inertia.mass) << "</mass>\n"
        << "        <inertia>\n"
        << "          <ixx>" << f(I(0, 0)) << "</ixx>\n"
        << "          <ixy>" << f(I(0, 1)) << "</ixy>\n"
        << "          <ixz>" << f(I(0, 2)) << "</ixz>\n"
        << "          <iyy>" << f(I(1, 1)) << "</iyy>\n"
        << "          <iyz>" << f(I(1, 2)) << "</iyz>\n"
        << "          <izz>" << f(I(2, 2)) << "</izz>\n"
        << "        </inertia>\n"
        << "      </inertial>\n";
    for (const char* role : {"collision", "visual"}) {
        out << "      <" << role << " name=\"" << role << "\">\n"
            << "        <geometry>\n"
            << "          <mesh>\n"
            << "            <uri>" << uri << "</uri>\n"
            << "          </mesh>\n"
            << "        </geometry>\n"
            << "      </" << role << ">\n";
    }
    out << "    </link>\n"
        << "  </model>\n"
        << "</sdf>\n";
    return out.str();
}

}  // namespace formfunc
