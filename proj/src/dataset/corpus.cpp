#include "formfunc/dataset/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "formfunc/arithmetic/latent_json.hpp"
#include "formfunc/voxcore/binvox.hpp"

namespace formfunc {

using nlohmann::json;

std::vector<ClassInfo> class_table(std::span<const LabeledShape> shapes) {
    std::vector<ClassInfo> out;
    for (const auto& s : shapes) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ClassInfo& c) { return c.label == s.class_label; });
        if (it == out.end()) {
            out.push_back({s.class_label, s.affordances, 0});
            it = out.end() - 1;
        }
        ++it->sample_count;
    }
    return out;
}

namespace {

std::string file_name(const std::string& label, int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%04d.binvox", index);
    return label + buf;
}

std::string source_name(ShapeSource s) { return s == ShapeSource::procedural ? "procedural" : "external"; }

}  // namespace

json manifest_json(std::span<const LabeledShape> shapes, std::uint64_t seed) {
    json classes = json::array();
    for (const auto& c : class_table(shapes))
        classes.push_back({{"label", c.label}, {"affordances", c.affordances}, {"sample_count", c.sample_count}});
    json files = json::array();
    std::map<std::string, int> counter;
    for (const auto& s : shapes)
        files.push_back({{"path", s.class_label + "/" + file_name(s.class_label, counter[s.class_label]++)},
                         {"class_label", s.class_label},
                         {"source", source_name(s.source)}});
    return {{"kind", "corpus_manifest"},
            {"schema_version", kSchemaVersion},
            {"seed", seed},
            {"dim", shapes.empty() ? 0 : shapes.front().grid.dim},
            {"classes", classes},
            {"files", files}};
}

void write_corpus(const std::filesystem::path& root, std::span<const LabeledShape> shapes, std::uint64_t seed) {
    namespace fs = std::filesystem;
    const json manifest = manifest_json(shapes, seed);
    fs::create_directories(root);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const fs::path file = root / manifest["files"][i]["path"].get<std::string>();
        fs::create_directories(file.parent_path());
        save_binvox(file, shapes[i].grid);
    }
    std::ofstream out(root / kManifestName);
    if (!out) throw Error("cannot write " + (root / kManifestName).string());
    out << manifest.dump(2) << '\n';
}

Corpus read_corpus(const std::filesystem::path& root) {
    std::ifstream in(root / kManifestName);
    if (!in) throw Error("no corpus manifest at " + (root / kManifestName).string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(std::string("corpus manifest is not valid JSON: ") + e.what());
    }
    Corpus corpus;
    try {
        corpus.seed = manifest.value("seed", std::uint64_t(0));
        corpus.dim = manifest.value("dim", 0);
        for (const auto& c : manifest.at("classes"))
            corpus.classes.push_back({c.at("label").get<std::string>(),
                                      c.at("affordances").get<std::vector<std::string>>(),
                                      c.value("sample_count", 0)});
        for (const auto& f : manifest.at("files")) {
            LabeledShape s;
            s.class_label = f.at("class_label").get<std::string>();
            const auto it = std::find_if(corpus.classes.begin(), corpus.classes.end(),
                                         [&](const ClassInfo& c) { return c.label == s.class_label; });
            if (it == corpus.classes.end()) throw Error("manifest file entry names unknown class " + s.class_label);
            s.affordances = it->affordances;
            s.source = f.value("source", std::string("procedural")) == "external" ? ShapeSource::external
                                                                                 : ShapeSource::procedural;
            s.grid = load_binvox(root / f.at("path").get<std::string>());
            corpus.shapes.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("corpus manifest malformed: ") + e.what());
    }
    return corpus;
}

std::vector<std::string> classes_with(std::span<const ClassInfo> classes, const std::string& affordance) {
    std::vector<std::string> out;
    for (const auto& c : classes)
        if (std::find(c.affordances.begin(), c.affordances.end(), affordance) != c.affordances.end())
            out.push_back(c.label);
    return out;
}

}  // namespace formfunc
