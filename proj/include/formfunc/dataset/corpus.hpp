#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "formfunc/dataset/dataset.hpp"

namespace formfunc {

struct ClassInfo {
    std::string label;
    std::vector<std::string> affordances;
    int sample_count = 0;
};

/// On-disk corpus: <root>/<class>/<class>_NNNN.binvox plus <root>/manifest.json
/// listing the class table, seed and every file in order.
struct Corpus {
    std::vector<ClassInfo> classes;
    std::vector<LabeledShape> shapes;
    std::uint64_t seed = 0;
    int dim = 0;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Classes in first-appearance order with their sample counts.
std::vector<ClassInfo> class_table(std::span<const LabeledShape> shapes);

void write_corpus(const std::filesystem::path& root, std::span<const LabeledShape> shapes, std::uint64_t seed);
Corpus read_corpus(const std::filesystem::path& root);

nlohmann::json manifest_json(std::span<const LabeledShape> shapes, std::uint64_t seed);

/// Labels of classes whose affordance set contains `affordance`.
std::vector<std::string> classes_with(std::span<const ClassInfo> classes, const std::string& affordance);

}  // namespace formfunc
