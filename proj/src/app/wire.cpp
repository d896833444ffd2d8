#include "formfunc/app/wire.hpp"

#include <cmath>

#include "formfunc/voxcore/binvox.hpp"

namespace formfunc {

using nlohmann::json;

json grid_to_json(const VoxelGrid& grid) {
    json rle = json::array();
    for (const auto& [value, count] : run_length_encode(grid)) rle.push_back({int(value), int(count)});
    return {{"dim", grid.dim},
            {"translate", {grid.translate.x(), grid.translate.y(), grid.translate.z()}},
            {"scale", grid.scale},
            {"rle", rle}};
}

VoxelGrid grid_from_json(const json& j) {
    try {
        const int dim = j.at("dim").get<int>();
        if (dim < 1 || dim > 512) throw Error("grid dim out of range");
        Eigen::Vector3d translate = Eigen::Vector3d::Zero();
        if (j.contains("translate")) {
            const auto& t = j["translate"];
            if (!t.is_array() || t.size() != 3) throw Error("grid translate must have 3 entries");
            translate = Eigen::Vector3d(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
        }
        VoxelGrid grid(dim, j.value("scale", 1.0), translate);
        Eigen::Index pos = 0;
        for (const auto& run : j.at("rle")) {
            if (!run.is_array() || run.size() != 2) throw Error("grid rle entries must be [value, count] pairs");
            const int value = run[0].get<int>();
            const long count = run[1].get<long>();
            if ((value != 0 && value != 1) || count < 1) throw Error("grid rle entry out of range");
            if (pos + count > grid.voxel_count()) throw Error("grid rle runs exceed dim^3");
            grid.values.segment(pos, count).setConstant(std::uint8_t(value));
            pos += count;
        }
        if (pos != grid.voxel_count()) throw Error("grid rle runs do not cover dim^3");
        return grid;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed grid: ") + e.what());
    }
}

json probabilities_to_json(const ProbabilityGrid& grid) {
    json a = json::array();
    for (Eigen::Index i = 0; i < grid.values.size(); ++i) a.push_back(std::round(grid.values[i] * 1e4) / 1e4);
    return a;
}

}  // namespace formfunc
