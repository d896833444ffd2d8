#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "formfunc/affordlab/affordlab.hpp"
#include "formfunc/dataset/corpus.hpp"

using namespace formfunc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("formfunc_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

const std::string kTetra = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

}  // namespace

TEST_CASE("built-in class table") {
    const auto& classes = builtin_classes();
    REQUIRE(classes.size() == 4);
    CHECK(find_class(classes, "tub").affordances == std::vector<std::string>{"contain-ability", "wash-ability"});
    CHECK(find_class(classes, "table").affordances == std::vector<std::string>{"support-ability"});
    CHECK_THROWS_AS(find_class(classes, "boat"), Error);
    ClassSpec too_big = find_class(classes, "table");
    too_big.half_width = {8, 20};
    CHECK_THROWS_AS(too_big.validate(), Error);
    CHECK_THROWS_AS(generate_class(too_big, 1, 1), Error);
    CHECK_THROWS_AS(generate_class(classes[0], 0, 1), Error);
}

TEST_CASE("generated shapes are seeded, sparse and centered") {
    for (const auto& spec : builtin_classes()) {
        const auto a = generate_class(spec, 10, 3), b = generate_class(spec, 10, 3), c = generate_class(spec, 10, 4);
        REQUIRE(a.size() == 10);
        bool differs = false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].grid == b[i].grid);
            differs = differs || !(a[i].grid == c[i].grid);
            CHECK(a[i].class_label == spec.label);
            CHECK(a[i].affordances == spec.affordances);
            const double occ = occupancy_fraction(a[i].grid);
            CHECK(occ > 0);
            CHECK(occ < 0.3);
            int lo[3] = {99, 99, 99}, hi[3] = {-1, -1, -1};
            const auto& g = a[i].grid;
            for (int y = 0; y < g.dim; ++y)
                for (int z = 0; z < g.dim; ++z)
                    for (int x = 0; x < g.dim; ++x)
                        if (g(x, y, z)) {
                            const int p[3] = {x, y, z};
                            for (int k = 0; k < 3; ++k) lo[k] = std::min(lo[k], p[k]), hi[k] = std::max(hi[k], p[k]);
                        }
            for (int k = 0; k < 3; ++k) CHECK(std::abs(lo[k] + hi[k] - (g.dim - 1)) <= 1);
            CHECK(g.scale == 2.0);
            CHECK(g.translate == Eigen::Vector3d::Constant(-1));
        }
        CHECK(differs);
    }
}

TEST_CASE("tables have a contiguous flat top spanning their footprint") {
    for (const auto& s : generate_class(find_class(builtin_classes(), "table"), 10, 5)) {
        const auto& g = s.grid;
        const Eigen::MatrixXi h = heightmap(g);
        const int top = h.maxCoeff();
        int x0 = 99, x1 = -1, z0 = 99, z1 = -1;
        for (int z = 0; z < g.dim; ++z)
            for (int x = 0; x < g.dim; ++x)
                if (h(x, z) >= 0) x0 = std::min(x0, x), x1 = std::max(x1, x), z0 = std::min(z0, z), z1 = std::max(z1, z);
        for (int z = z0; z <= z1; ++z)
            for (int x = x0; x <= x1; ++x) REQUIRE(g(x, top, z) == 1);
        CHECK(supportability_test(g).supported_count() > 0);
    }
}

TEST_CASE("tubs contain spheres") {
    for (const auto& s : generate_class(find_class(builtin_classes(), "tub"), 10, 6)) {
        const auto r = containability_test(s.grid, default_sphere_radius(s.grid));
        CHECK(r.ratio > 0);
    }
}

TEST_CASE("augmentation adds the three quarter turns") {
    const auto shapes = generate_class(find_class(builtin_classes(), "chair"), 3, 1);
    const auto out = augment(shapes);
    REQUIRE(out.size() == 12);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].class_label == "chair");
        CHECK(occupied_count(out[i].grid) == occupied_count(shapes[i / 4].grid));
    }
    CHECK(out[0].grid == shapes[0].grid);
    CHECK(out[1].grid == rotate_quarter(shapes[0].grid, QuarterTurns::k90));

    LabeledShape cube;
    cube.grid = VoxelGrid(4);
    cube.grid(1, 1, 1) = cube.grid(2, 1, 1) = cube.grid(1, 1, 2) = cube.grid(2, 1, 2) = 1;
    const auto sym = augment(std::vector<LabeledShape>{cube});
    REQUIRE(sym.size() == 4);
    for (const auto& s : sym) CHECK(s.grid == cube.grid);
}

TEST_CASE("OFF directory ingestion") {
    TempDir dir("ingest");
    CHECK(ingest_off_directory(dir.path, 8, builtin_classes()).shapes.empty());

    write_file(dir.path / "table" / "a.off", kTetra);
    write_file(dir.path / "table" / "b.off", "OFX\n");
    write_file(dir.path / "table" / "notes.txt", "ignored");
    const auto r = ingest_off_directory(dir.path, 8, builtin_classes());
    REQUIRE(r.shapes.size() == 1);
    CHECK(r.shapes[0].class_label == "table");
    CHECK(r.shapes[0].source == ShapeSource::external);
    CHECK(r.shapes[0].grid.dim == 8);
    CHECK(occupied_count(r.shapes[0].grid) > 0);
    CHECK(r.warnings.size() == 1);

    write_file(dir.path / "boat" / "c.off", kTetra);
    CHECK_THROWS_AS(ingest_off_directory(dir.path, 8, builtin_classes()), Error);
    CHECK_THROWS_AS(ingest_off_directory(dir.path / "missing", 8, builtin_classes()), Error);
}

TEST_CASE("stratified split") {
    std::vector<LabeledShape> shapes;
    for (const auto& spec : builtin_classes()) {
        auto part = generate_class(spec, 25, 2);
        shapes.insert(shapes.end(), part.begin(), part.end());
    }
    const Split s = split(shapes, 0.8, 7);
    CHECK(s.train.size() == 80);
    CHECK(s.held_out.size() == 20);
    std::map<std::string, int> per_class;
    for (const auto& x : s.train) per_class[x.class_label]++;
    for (const auto& [label, n] : per_class) CHECK(std::abs(n - 20) <= 1);

    const Split again = split(shapes, 0.8, 7);
    for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(again.train[i].grid == s.train[i].grid);

    // Disjoint and exhaustive: each input lands in exactly one side.
    std::size_t matched = 0;
    for (const auto& x : shapes) {
        int hits = 0;
        for (const auto* side : {&s.train, &s.held_out})
            for (const auto& y : *side) hits += y.grid == x.grid;
        matched += hits >= 1;
    }
    CHECK(matched == shapes.size());
    CHECK(s.train.size() + s.held_out.size() == shapes.size());

    CHECK_THROWS_AS(split(std::vector<LabeledShape>(shapes.begin(), shapes.begin() + 1), 0.5, 1), Error);
    CHECK_THROWS_AS(split(shapes, 1.0, 1), Error);
}

TEST_CASE("corpus files round trip") {
    TempDir a("corpus_a"), b("corpus_b");
    std::vector<LabeledShape> shapes;
    for (const auto& spec : builtin_classes()) {
        auto part = generate_class(spec, 3, 7);
        shapes.insert(shapes.end(), part.begin(), part.end());
    }
    write_corpus(a.path, shapes, 7);
    write_corpus(b.path, shapes, 7);
    CHECK(read_file(a.path / kManifestName) == read_file(b.path / kManifestName));
    CHECK(read_file(a.path / "tub" / "tub_0002.binvox") == read_file(b.path / "tub" / "tub_0002.binvox"));

    const Corpus c = read_corpus(a.path);
    CHECK(c.seed == 7);
    CHECK(c.dim == 32);
    REQUIRE(c.shapes.size() == shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        CHECK(c.shapes[i].grid == shapes[i].grid);
        CHECK(c.shapes[i].class_label == shapes[i].class_label);
        CHECK(c.shapes[i].affordances == shapes[i].affordances);
    }
    REQUIRE(c.classes.size() == 4);
    CHECK(c.classes[2].label == "tub");
    CHECK(c.classes[2].sample_count == 3);
    CHECK(classes_with(c.classes, "wash-ability") == std::vector<std::string>{"tub"});
    CHECK(classes_with(c.classes, "fly-ability").empty());

    TempDir empty("corpus_empty");
    CHECK_THROWS_AS(read_corpus(empty.path), Error);
    write_file(empty.path / kManifestName, "{not json");
    CHECK_THROWS_AS(read_corpus(empty.path), Error);
}
