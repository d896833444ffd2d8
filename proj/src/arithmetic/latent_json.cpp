#include "formfunc/arithmetic/latent_json.hpp"

namespace formfunc {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw Error("expected a JSON array of numbers");
    Eigen::VectorXd v(Eigen::Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw Error("expected a JSON array of numbers");
        v[Eigen::Index(i)] = j[i].get<double>();
    }
    return v;
}

namespace {

void expect_kind(const json& j, const char* kind) {
    if (!j.is_object()) throw Error(std::string("expected a ") + kind + " object");
    if (j.contains("kind") && j["kind"] != kind)
        throw Error(std::string("expected kind '") + kind + "', got " + j["kind"].dump());
}

}  // namespace

void to_json(json& j, const LatentCode& code) {
    j = json{{"kind", "latent_code"},
             {"schema_version", kSchemaVersion},
             {"means", vector_to_json(code.means)},
             {"log_variances", vector_to_json(code.log_variances)}};
}

void from_json(const json& j, LatentCode& code) {
    expect_kind(j, "latent_code");
    if (!j.contains("means") || !j.contains("log_variances")) throw Error("latent_code needs means and log_variances");
    code = LatentCode(vector_from_json(j["means"]), vector_from_json(j["log_variances"]));
    code.validate();
}

void to_json(json& j, const ImportanceVector& iv) {
    j = json{{"kind", "importance_vector"},
             {"schema_version", kSchemaVersion},
             {"scores", vector_to_json(iv.scores)},
             {"w_void", iv.w_void},
             {"w_prior", iv.w_prior}};
}

void from_json(const json& j, ImportanceVector& iv) {
    expect_kind(j, "importance_vector");
    if (!j.contains("scores")) throw Error("importance_vector needs scores");
    iv.scores = vector_from_json(j["scores"]);
    iv.w_void = j.value("w_void", 2.0 / 3.0);
    iv.w_prior = j.value("w_prior", 1.0 - iv.w_void);
}

void to_json(json& j, const ClassEssence& essence) {
    to_json(j, essence.code);
    j["kind"] = "class_essence";
    j["class_label"] = essence.class_label;
    j["sample_count"] = essence.sample_count;
}

void from_json(const json& j, ClassEssence& essence) {
    expect_kind(j, "class_essence");
    json code = j;
    code.erase("kind");
    from_json(code, essence.code);
    essence.class_label = j.value("class_label", std::string{});
    essence.sample_count = j.value("sample_count", 1);
}

}  // namespace formfunc
