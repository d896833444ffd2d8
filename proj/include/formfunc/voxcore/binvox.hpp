#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "formfunc/voxcore/grid.hpp"

namespace formfunc {

using Bytes = std::vector<std::uint8_t>;

/// Run-length pairs (value, count) over the grid's storage order, count in 1..255.
std::vector<std::pair<std::uint8_t, std::uint8_t>> run_length_encode(const VoxelGrid& grid);

/// Inverse of run_length_encode; throws FormatError if the counts do not sum to dim^3.
void run_length_decode(const std::vector<std::pair<std::uint8_t, std::uint8_t>>& runs, VoxelGrid& grid);

/// binvox version 1: ASCII header followed by run-length byte pairs.
/// translate and scale are printed in shortest round-trip form so that
/// read_binvox(write_binvox(g)) == g bit for bit.
Bytes write_binvox(const VoxelGrid& grid);
VoxelGrid read_binvox(const Bytes& bytes);

void save_binvox(const std::filesystem::path& path, const VoxelGrid& grid);
VoxelGrid load_binvox(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace formfunc
