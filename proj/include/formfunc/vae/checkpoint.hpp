#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "formfunc/vae/model.hpp"

namespace formfunc {

/// First line of every checkpoint file. The trailing number is the format
/// version; readers reject any other value.
inline constexpr std::string_view kCheckpointMagic = "formfunc-vae 1\n";

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct Checkpoint {
    Model model;
    /// Training settings the model was produced with, when recorded.
    std::optional<TrainConfig> train;
};

/// Layout: magic line, 8-byte little-endian header length, compact JSON
/// header (model config, seed, tensor table), then the raw little-endian
/// tensors in table order: float32 parameters and norm statistics, and the
/// float64 gamma vector last.
void write_checkpoint(std::ostream& out, const Model& model, const TrainConfig* train = nullptr);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainConfig* train = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace formfunc
