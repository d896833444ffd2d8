#include "formfunc/app/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "formfunc/app/pipeline.hpp"
#include "formfunc/app/server.hpp"
#include "formfunc/app/wire.hpp"
#include "formfunc/arithmetic/latent_json.hpp"
#include "formfunc/vae/checkpoint.hpp"
#include "formfunc/vae/train.hpp"
#include "formfunc/voxcore/binvox.hpp"
#include "formfunc/voxcore/inertia.hpp"
#include "formfunc/voxcore/marching_cubes.hpp"

namespace formfunc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(f), {}};
}

// JSON to `path`, or to `out` when path is empty.
void emit_json(const json& j, const std::string& path, std::ostream& out) {
    if (path.empty())
        out << j.dump(2) << "\n";
    else
        write_text(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

LatentCode read_code(const fs::path& path) {
    try {
        // Essence and design documents written by this tool carry a code too.
        const json j = read_json(path);
        const json kind = j.is_object() ? j.value("kind", json()) : json();
        if (kind == "class_essence") return j.get<ClassEssence>().code;
        if (kind == "design") return j.at("code").get<LatentCode>();
        return j.get<LatentCode>();
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": not a latent code: " + e.what());
    }
}

bool is_binvox(const fs::path& path) { return path.extension() == ".binvox"; }

struct ModelFiles {
    std::string checkpoint;
    std::string corpus;

    void add(CLI::App* cmd, bool with_corpus = true) {
        cmd->add_option("--checkpoint", checkpoint, "Trained model checkpoint")->required()->check(CLI::ExistingFile);
        if (with_corpus)
            cmd->add_option("--corpus", corpus, "Corpus directory (manifest.json + binvox files)")
                ->required()
                ->check(CLI::ExistingDirectory);
    }
    std::shared_ptr<Session> session() const { return Session::load(checkpoint, corpus); }
};

struct ProbeOptions {
    AffordanceOptions value;

    void add(CLI::App* cmd) {
        cmd->add_option("--probe-side", value.probe.side, "Supportability cube side in metres")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        cmd->add_option("--flatness-tol", value.probe.flatness_tol, "Allowed height spread under the cube, voxels")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--sphere-radius", value.sphere_radius,
                        "Containability sphere radius in metres (0: scale/16)")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
    }
};

// design.binvox, design.obj, support.pgm and design.json under `dir`.
void write_design(const Session& session, const Design& d, double bp, double tp, const fs::path& dir,
                  std::ostream& out) {
    fs::create_directories(dir);
    save_binvox(dir / "design.binvox", d.grid);
    write_text(dir / "design.obj", to_obj(marching_cubes(d.grid)));
    std::ostringstream pgm;
    write_pgm(pgm, d.report.support);
    write_text(dir / "support.pgm", pgm.str());
    json nearest = json::array();
    for (const auto& n : d.nearest)
        nearest.push_back({{"index", n.index},
                           {"class_label", session.corpus().shapes[n.index].class_label},
                           {"distance", n.distance}});
    json doc{{"kind", "design"},
             {"schema_version", kSchemaVersion},
             {"base", d.base},
             {"top", d.top},
             {"base_percent", bp},
             {"top_percent", tp},
             {"occupied", occupied_count(d.grid)},
             {"code", d.code},
             {"affordance_report", to_json(d.report)},
             {"nearest", nearest}};
    write_text(dir / "design.json", doc.dump(2) + "\n");
    out << "base=" << d.base << " top=" << d.top << " occupied=" << occupied_count(d.grid)
        << " supported=" << d.report.support.supported_count() << " containability=" << d.report.contain.ratio
        << "\nwrote " << (dir / "design.binvox").string() << ", design.obj, design.json, support.pgm\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Voxel shape design by latent functionality arithmetic", "formfunc"};
    app.set_config("--config", "", "TOML/INI file of flag values, one [section] per subcommand")
        ->envname("FORMFUNC_CONFIG");
    app.require_subcommand(1);
    std::function<void()> action;

    // dataset gen | ingest
    auto* dataset = app.add_subcommand("dataset", "Build a labeled corpus");
    dataset->require_subcommand(1);

    struct {
        std::string out;
        std::uint64_t seed = 7;
        int samples = 50;
        std::vector<std::string> classes;
    } gen;
    auto* gen_cmd = dataset->add_subcommand("gen", "Generate procedural classes");
    gen_cmd->add_option("--out", gen.out, "Corpus directory to write")->required();
    gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--samples", gen.samples, "Samples per class")->capture_default_str()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--classes", gen.classes, "Subset of table,chair,tub,monitor")->delimiter(',');
    gen_cmd->callback([&] {
        action = [&] {
            for (const auto& c : gen.classes) find_class(builtin_classes(), c);
            std::vector<LabeledShape> shapes;
            for (const auto& spec : builtin_classes()) {
                if (!gen.classes.empty() && std::find(gen.classes.begin(), gen.classes.end(), spec.label) == gen.classes.end())
                    continue;
                auto part = generate_class(spec, gen.samples, gen.seed);
                shapes.insert(shapes.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
            }
            write_corpus(gen.out, shapes, gen.seed);
            out << "wrote " << shapes.size() << " shapes to " << gen.out << "\n";
        };
    });

    struct {
        std::string input, out;
        int dim = 32;
    } ingest;
    auto* ingest_cmd = dataset->add_subcommand("ingest", "Voxelize <input>/<class>/*.off");
    ingest_cmd->add_option("--input", ingest.input, "Directory of class subdirectories")
        ->required()
        ->check(CLI::ExistingDirectory);
    ingest_cmd->add_option("--out", ingest.out, "Corpus directory to write")->required();
    ingest_cmd->add_option("--dim", ingest.dim, "Grid resolution")->capture_default_str()->check(CLI::Range(1, 512));
    ingest_cmd->callback([&] {
        action = [&] {
            auto result = ingest_off_directory(ingest.input, ingest.dim, builtin_classes());
            for (const auto& w : result.warnings) err << "warning: " << w << "\n";
            write_corpus(ingest.out, result.shapes, 0);
            out << "wrote " << result.shapes.size() << " shapes, skipped " << result.warnings.size() << "\n";
        };
    });

    // train
    struct {
        std::string corpus, out, history;
        ModelConfig model;
        TrainConfig train;
        std::string optimizer = "adam";
        double train_fraction = 0.8;
        bool no_augment = false;
        bool no_dense = false;
    } tr;
    auto* train_cmd = app.add_subcommand("train", "Train the autoencoder on a corpus");
    train_cmd->add_option("--corpus", tr.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--out", tr.out, "Checkpoint file to write")->required();
    train_cmd->add_option("--history", tr.history, "Write per-epoch statistics as JSON");
    train_cmd->add_option("--latent-dim", tr.model.latent_dim, "Latent variables")->capture_default_str();
    train_cmd->add_option("--widths", tr.model.channel_widths, "Encoder block widths")->delimiter(',');
    train_cmd->add_flag("--no-dense", tr.no_dense, "Disable dense stacking of earlier activations");
    train_cmd->add_option("--epochs", tr.train.epochs)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch-size", tr.train.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--learning-rate", tr.train.learning_rate)->capture_default_str();
    train_cmd->add_option("--alpha", tr.train.alpha, "Weight of filled voxels")->capture_default_str();
    train_cmd->add_option("--gamma-init", tr.train.gamma_init)->capture_default_str();
    train_cmd->add_option("--lambda-bits", tr.train.lambda_bits)->capture_default_str();
    train_cmd->add_option("--gamma-rate", tr.train.gamma_rate)->capture_default_str();
    train_cmd->add_option("--optimizer", tr.optimizer)->capture_default_str()->check(CLI::IsMember({"adam", "sgd"}));
    train_cmd->add_option("--seed", tr.train.rng_seed, "Seeds initialization, split and shuffling")
        ->capture_default_str();
    train_cmd->add_option("--train-fraction", tr.train_fraction, "Per-class share used for training")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    train_cmd->add_flag("--no-augment", tr.no_augment, "Skip the quarter-turn augmentation");
    train_cmd->callback([&] {
        action = [&] {
            const Corpus corpus = read_corpus(tr.corpus);
            tr.model.input_dim = corpus.dim;
            tr.model.stack_dense = !tr.no_dense;
            tr.train.optimizer = optimizer_from_string(tr.optimizer);
            tr.model.validate();
            tr.train.validate();
            const Split parts = split(corpus.shapes, tr.train_fraction, tr.train.rng_seed);
            const auto train_shapes = tr.no_augment ? parts.train : augment(parts.train);
            const auto train_grids = grids_of(train_shapes);
            const auto held_out = grids_of(parts.held_out);
            out << "training on " << train_grids.size() << " grids, " << held_out.size() << " held out\n";

            Model model(tr.model, tr.train.rng_seed, tr.train.gamma_init);
            const TrainHistory history = train(model, train_grids, tr.train, [&](const EpochStats& s) {
                out << "epoch " << s.epoch << " loss " << s.loss << " recon " << s.reconstruction << " occupancy "
                    << s.predicted_occupancy << " gamma " << s.mean_gamma << std::endl;
            });
            const double iou = mean_reconstruction_iou(model, held_out);
            out << "held-out IoU " << iou << "\n";
            save_checkpoint(tr.out, model, &tr.train);
            if (!tr.history.empty()) {
                json epochs = json::array();
                for (const auto& s : history.epochs)
                    epochs.push_back({{"epoch", s.epoch},
                                      {"loss", s.loss},
                                      {"reconstruction", s.reconstruction},
                                      {"predicted_occupancy", s.predicted_occupancy},
                                      {"mean_gamma", s.mean_gamma}});
                write_text(tr.history, json{{"kind", "train_history"},
                                            {"schema_version", kSchemaVersion},
                                            {"epochs", epochs},
                                            {"held_out_iou", iou}}
                                           .dump(2) +
                                           "\n");
            }
            out << "wrote " << tr.out << "\n";
        };
    });

    // encode
    struct {
        ModelFiles files;
        std::string input, out;
    } enc;
    auto* encode_cmd = app.add_subcommand("encode", "Latent code of a binvox grid");
    enc.files.add(encode_cmd, false);
    encode_cmd->add_option("--input", enc.input, "binvox grid")->required()->check(CLI::ExistingFile);
    encode_cmd->add_option("--out", enc.out, "JSON output (default stdout)");
    encode_cmd->callback([&] {
        action = [&] {
            const Model model = load_checkpoint(enc.files.checkpoint).model;
            emit_json(json(model.encode(load_binvox(enc.input))), enc.out, out);
        };
    });

    // essence <class>
    struct {
        ModelFiles files;
        std::string label, out, decoded;
    } ess;
    auto* essence_cmd = app.add_subcommand("essence", "Mean latent code of a class");
    ess.files.add(essence_cmd);
    essence_cmd->add_option("class", ess.label, "Class label")->required();
    essence_cmd->add_option("--out", ess.out, "JSON output (default stdout)");
    essence_cmd->add_option("--decoded", ess.decoded, "Also write the decoded essence as binvox");
    essence_cmd->callback([&] {
        action = [&] {
            const auto session = ess.files.session();
            const auto entry = session->essence(ess.label);
            emit_json(json(entry->essence), ess.out, out);
            if (!ess.decoded.empty()) save_binvox(ess.decoded, threshold(session->decode(entry->essence.code), 0.5f));
        };
    });

    // importance
    struct {
        ModelFiles files;
        std::string label, code, out;
        double w_void = 2.0 / 3.0;
    } imp;
    auto* importance_cmd = app.add_subcommand("importance", "Importance vector of a class essence or a code");
    imp.files.add(importance_cmd);
    auto* imp_class = importance_cmd->add_option("--class", imp.label, "Class whose essence is scored");
    auto* imp_code = importance_cmd->add_option("--code", imp.code, "Latent code JSON to score")->check(CLI::ExistingFile);
    imp_class->excludes(imp_code);
    importance_cmd->add_option("--w-void", imp.w_void, "Weight of the void-code term")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    importance_cmd->add_option("--out", imp.out, "JSON output (default stdout)");
    importance_cmd->callback([&] {
        if (imp.label.empty() == imp.code.empty()) throw CLI::ValidationError("importance", "give --class or --code");
        action = [&] {
            const auto session = imp.files.session();
            const LatentCode code = imp.code.empty() ? session->essence(imp.label)->essence.code : read_code(imp.code);
            emit_json(json(importance_vector(code, session->void_code(), imp.w_void)), imp.out, out);
        };
    });

    // combine
    struct {
        ModelFiles files;
        ProbeOptions probe;
        std::string base, top, out_dir = "design";
        double base_percent = 0.5, top_percent = 0.5;
    } comb;
    auto* combine_cmd = app.add_subcommand("combine", "Combine two class essences, decode and test the result");
    comb.files.add(combine_cmd);
    comb.probe.add(combine_cmd);
    combine_cmd->add_option("--base", comb.base, "Base class")->required();
    combine_cmd->add_option("--top", comb.top, "Top class")->required();
    combine_cmd->add_option("--base-percent", comb.base_percent, "Share of base variables kept")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    combine_cmd->add_option("--top-percent", comb.top_percent, "Share of top variables transferred")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    combine_cmd->add_option("--out-dir", comb.out_dir, "Output directory")->capture_default_str();
    combine_cmd->callback([&] {
        action = [&] {
            const auto session = comb.files.session();
            const Design d = session->combine(comb.base, comb.top, comb.base_percent, comb.top_percent, comb.probe.value);
            write_design(*session, d, comb.base_percent, comb.top_percent, comb.out_dir, out);
        };
    });

    // reconstruct
    struct {
        ModelFiles files;
        std::string input, out, probabilities;
        float threshold = 0.5f;
        double scale = 2.0;
    } rec;
    auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Decode a code (.json) or autoencode a grid (.binvox)");
    rec.files.add(reconstruct_cmd, false);
    reconstruct_cmd->add_option("--input", rec.input, "Latent code JSON or binvox grid")
        ->required()
        ->check(CLI::ExistingFile);
    reconstruct_cmd->add_option("--out", rec.out, "binvox output")->required();
    reconstruct_cmd->add_option("--threshold", rec.threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    reconstruct_cmd->add_option("--probabilities", rec.probabilities, "Also write raw probabilities as JSON");
    reconstruct_cmd->add_option("--scale", rec.scale, "Edge length in metres of a decoded code's origin-centered cube")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    reconstruct_cmd->callback([&] {
        action = [&] {
            const Model model = load_checkpoint(rec.files.checkpoint).model;
            VoxelGrid frame(model.config().input_dim, rec.scale, Eigen::Vector3d::Constant(-rec.scale / 2));
            Eigen::VectorXd z;
            if (is_binvox(rec.input)) {
                frame = load_binvox(rec.input);
                z = model.encode(frame).means;
            } else {
                z = read_code(rec.input).means;
            }
            ProbabilityGrid p = model.decode(z);
            p.translate = frame.translate;
            p.scale = frame.scale;
            const VoxelGrid grid = threshold(p, rec.threshold);
            save_binvox(rec.out, grid);
            if (!rec.probabilities.empty())
                write_text(rec.probabilities, json{{"dim", p.dim}, {"values", probabilities_to_json(p)}}.dump() + "\n");
            out << "occupied " << occupied_count(grid) << " of " << grid.voxel_count() << "\n";
        };
    });

    // afford-test support|contain
    struct {
        ProbeOptions probe;
        std::string test, input, out, pgm;
    } aff;
    auto* afford_cmd = app.add_subcommand("afford-test", "Run a physical affordance test on a binvox grid");
    afford_cmd->add_option("test", aff.test, "support or contain")->required()->check(CLI::IsMember({"support", "contain"}));
    afford_cmd->add_option("--input", aff.input, "binvox grid")->required()->check(CLI::ExistingFile);
    aff.probe.add(afford_cmd);
    afford_cmd->add_option("--out", aff.out, "JSON output (default stdout)");
    afford_cmd->add_option("--pgm", aff.pgm, "Supportability map as PGM image");
    afford_cmd->callback([&] {
        action = [&] {
            const VoxelGrid grid = load_binvox(aff.input);
            json result;
            if (aff.test == "support") {
                const auto map = supportability_test(grid, aff.probe.value.probe);
                result = to_json(map);
                if (!aff.pgm.empty()) {
                    std::ostringstream s;
                    write_pgm(s, map);
                    write_text(aff.pgm, s.str());
                }
            } else {
                const double r = aff.probe.value.sphere_radius > 0 ? aff.probe.value.sphere_radius
                                                                   : default_sphere_radius(grid);
                result = to_json(containability_test(grid, r));
            }
            result["schema_version"] = kSchemaVersion;
            emit_json(result, aff.out, out);
        };
    });

    // export-mesh
    struct {
        std::string input, out, sdf, name = "design";
        double mass = 1.0, iso = 0.5;
    } exp;
    auto* export_cmd = app.add_subcommand("export-mesh", "Marching-cubes OBJ, optionally with an SDF model");
    export_cmd->add_option("--input", exp.input, "binvox grid")->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--out", exp.out, "OBJ output")->required();
    export_cmd->add_option("--sdf", exp.sdf, "Also write a Gazebo SDF model referencing the OBJ");
    export_cmd->add_option("--mass", exp.mass, "Model mass in kg")->capture_default_str()->check(CLI::PositiveNumber);
    export_cmd->add_option("--name", exp.name, "SDF model name")->capture_default_str();
    export_cmd->add_option("--iso", exp.iso, "Iso level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    export_cmd->callback([&] {
        action = [&] {
            const VoxelGrid grid = load_binvox(exp.input);
            const TriMesh mesh = marching_cubes(grid, exp.iso);
            write_text(exp.out, to_obj(mesh));
            if (!exp.sdf.empty())
                write_text(exp.sdf, export_sdf(mesh, inertia_of(grid, exp.mass), exp.name,
                                               fs::path(exp.out).filename().string()));
            out << mesh.triangles.size() << " triangles\n";
        };
    });

    // request --affordances a,b
    struct {
        ModelFiles files;
        ProbeOptions probe;
        std::vector<std::string> affordances;
        std::string base, top, out_dir = "design";
        double base_percent = 0.5, top_percent = 0.5;
    } req;
    auto* request_cmd = app.add_subcommand("request", "Design an object providing the requested affordances");
    req.files.add(request_cmd);
    req.probe.add(request_cmd);
    request_cmd->add_option("--affordances", req.affordances, "One or two affordance labels, base first")
        ->required()
        ->delimiter(',');
    request_cmd->add_option("--base", req.base, "Base class, overriding the first affordance's lookup");
    request_cmd->add_option("--top", req.top, "Top class, overriding the second affordance's lookup");
    request_cmd->add_option("--base-percent", req.base_percent)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    request_cmd->add_option("--top-percent", req.top_percent)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    request_cmd->add_option("--out-dir", req.out_dir, "Output directory")->capture_default_str();
    request_cmd->callback([&] {
        action = [&] {
            const auto session = req.files.session();
            auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
            const auto [base, top] = session->resolve(req.affordances, opt(req.base), opt(req.top));
            const Design d = session->combine(base, top, req.base_percent, req.top_percent, req.probe.value);
            write_design(*session, d, req.base_percent, req.top_percent, req.out_dir, out);
        };
    });

    // serve
    struct {
        ModelFiles files;
        std::string host = "127.0.0.1";
        int port = 8080;
    } srv;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP JSON design service");
    srv.files.add(serve_cmd);
    serve_cmd->add_option("--host", srv.host)->capture_default_str();
    serve_cmd->add_option("--port", srv.port)->capture_default_str()->envname("FORMFUNC_PORT")->check(CLI::Range(0, 65535));
    serve_cmd->callback([&] {
        action = [&] {
            const DesignService service(srv.files.session());
            HttpServer server(service);
            const int port = server.start(srv.host, srv.port);
            out << "listening on http://" << srv.host << ":" << port << std::endl;
            server.wait();
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }
    try {
        action();
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace formfunc::cli
