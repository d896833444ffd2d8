#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "formfunc/voxcore/grid.hpp"

namespace formfunc {

enum class ShapeSource { procedural, external };

struct LabeledShape {
    VoxelGrid grid;
    std::string class_label;
    std::vector<std::string> affordances;
    ShapeSource source = ShapeSource::procedural;
};

enum class ShapeKind { table, chair, tub, monitor };

/// Inclusive integer range in voxels.
struct IntRange {
    int lo = 1;
    int hi = 1;
};

/// Procedural class description. Ranges are in voxels and each generator
/// reads the ones it needs:
///   table   : top slab half extents, total height, slab thickness, leg side
///   chair   : seat half extents, seat height, slab thickness, leg side, back height
///   tub     : outer half extents, height, wall thickness (also the floor)
///   monitor : screen half width, screen height, screen thickness, stand side, base half depth
struct ClassSpec {
    std::string label;
    std::vector<std::string> affordances;
    ShapeKind kind = ShapeKind::table;
    IntRange half_width{8, 12};   // x
    IntRange half_depth{6, 11};   // z
    IntRange height{16, 18};
    IntRange thickness{2, 3};
    IntRange leg{2, 3};
    IntRange extra{8, 11};
    int dim = 32;
    double scale = 2.0;  // metres

    /// Throws Error for empty ranges or shapes that cannot fit the grid.
    void validate() const;
};

/// table, chair, tub and monitor with their affordance labels.
const std::vector<ClassSpec>& builtin_classes();
const ClassSpec& find_class(std::span<const ClassSpec> table, const std::string& label);

/// n seeded samples of one class, each centered in the grid.
std::vector<LabeledShape> generate_class(const ClassSpec& spec, int n, std::uint64_t seed);

/// Every shape followed by its 90, 180 and 270 degree turns about the vertical axis.
std::vector<LabeledShape> augment(std::span<const LabeledShape> shapes);

struct IngestResult {
    std::vector<LabeledShape> shapes;
    std::vector<std::string> warnings;  // one per skipped file
};

/// Reads <path>/<class>/*.off in sorted order. Files that fail to parse or
/// voxelize are skipped with a warning; a subdirectory naming no class in
/// `table` is an Error.
IngestResult ingest_off_directory(const std::filesystem::path& path, int dim, std::span<const ClassSpec> table);

struct Split {
    std::vector<LabeledShape> train;
    std::vector<LabeledShape> held_out;
};

/// Stratified by class: each class contributes round(train_fraction * n)
/// samples to train (at least one each side). Deterministic given the seed.
Split split(std::span<const LabeledShape> shapes, double train_fraction, std::uint64_t seed);

std::vector<VoxelGrid> grids_of(std::span<const LabeledShape> shapes);

}  // namespace formfunc
