#include "formfunc/dataset/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "formfunc/voxcore/voxelize.hpp"

namespace formfunc {

std::vector<LabeledShape> augment(std::span<const LabeledShape> shapes) {
    std::vector<LabeledShape> out;
    out.reserve(shapes.size() * 4);
    for (const auto& s : shapes) {
        out.push_back(s);
        for (auto turns : {QuarterTurns::k90, QuarterTurns::k180, QuarterTurns::k270}) {
            LabeledShape r = s;
            r.grid = rotate_quarter(s.grid, turns);
            out.push_back(std::move(r));
        }
    }
    return out;
}

IngestResult ingest_off_directory(const std::filesystem::path& path, int dim, std::span<const ClassSpec> table) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(path)) throw Error("ingest: " + path.string() + " is not a directory");
    std::vector<fs::path> class_dirs;
    for (const auto& e : fs::directory_iterator(path))
        if (e.is_directory()) class_dirs.push_back(e.path());
    std::sort(class_dirs.begin(), class_dirs.end());

    IngestResult result;
    for (const auto& dir : class_dirs) {
        const ClassSpec& spec = find_class(table, dir.filename().string());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            std::string ext = e.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (e.is_regular_file() && ext == ".off") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            try {
                std::ifstream in(file);
                if (!in) throw Error("cannot open file");
                LabeledShape s;
                s.grid = voxelize(parse_off(in), dim);
                s.class_label = spec.label;
                s.affordances = spec.affordances;
                s.source = ShapeSource::external;
                result.shapes.push_back(std::move(s));
            } catch (const Error& e) {
                result.warnings.push_back(file.string() + ": " + e.what());
            }
        }
    }
    return result;
}

Split split(std::span<const LabeledShape> shapes, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0 && train_fraction < 1)) throw Error("split: train_fraction must lie in (0, 1)");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < shapes.size(); ++i) by_class[shapes[i].class_label].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<bool> in_train(shapes.size(), false);
    for (auto& [label, idx] : by_class) {
        if (idx.size() < 2) throw Error("split: class '" + label + "' has fewer than 2 samples");
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n = std::clamp<std::size_t>(std::size_t(std::lround(train_fraction * double(idx.size()))), 1,
                                               idx.size() - 1);
        for (std::size_t k = 0; k < n; ++k) in_train[idx[k]] = true;
    }
    Split out;
    for (std::size_t i = 0; i < shapes.size(); ++i) (in_train[i] ? out.train : out.held_out).push_back(shapes[i]);
    return out;
}

std::vector<VoxelGrid> grids_of(std::span<const LabeledShape> shapes) {
    std::vector<VoxelGrid> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes) out.push_back(s.grid);
    return out;
}

}  // namespace formfunc
