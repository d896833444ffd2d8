#pragma once

#include <json.hpp>

#include "formfunc/voxcore/grid.hpp"

namespace formfunc {

/// {"dim": d, "translate": [x, y, z], "scale": s, "rle": [[value, count], ...]}
/// with runs over the storage order (x fastest, then z, then y).
nlohmann::json grid_to_json(const VoxelGrid& grid);
/// Accepts any positive run counts; throws Error unless they sum to dim^3.
VoxelGrid grid_from_json(const nlohmann::json& j);

/// Raw probabilities in storage order, rounded to 4 decimals to keep bodies small.
nlohmann::json probabilities_to_json(const ProbabilityGrid& grid);

}  // namespace formfunc
