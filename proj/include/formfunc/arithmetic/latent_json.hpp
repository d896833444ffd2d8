#pragma once

#include <json.hpp>

#include "formfunc/arithmetic/arithmetic.hpp"

namespace formfunc {

inline constexpr int kSchemaVersion = 1;

// {"kind": "latent_code", "schema_version": 1, "means": [...], "log_variances": [...]}
void to_json(nlohmann::json& j, const LatentCode& code);
void from_json(const nlohmann::json& j, LatentCode& code);

// {"kind": "importance_vector", ..., "scores": [...], "w_void": w, "w_prior": w}
void to_json(nlohmann::json& j, const ImportanceVector& iv);
void from_json(const nlohmann::json& j, ImportanceVector& iv);

// A latent_code document plus "class_label" and "sample_count".
void to_json(nlohmann::json& j, const ClassEssence& essence);
void from_json(const nlohmann::json& j, ClassEssence& essence);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace formfunc
