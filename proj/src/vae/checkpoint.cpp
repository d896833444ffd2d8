#include "formfunc/vae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace formfunc {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

using nlohmann::json;

void to_json(json& j, const ModelConfig& c) {
    j = json{{"input_dim", c.input_dim},
             {"latent_dim", c.latent_dim},
             {"channel_widths", c.channel_widths},
             {"stack_dense", c.stack_dense}};
}

void from_json(const json& j, ModelConfig& c) {
    ModelConfig d;
    c.input_dim = j.value("input_dim", d.input_dim);
    c.latent_dim = j.value("latent_dim", d.latent_dim);
    c.channel_widths = j.value("channel_widths", d.channel_widths);
    c.stack_dense = j.value("stack_dense", d.stack_dense);
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"alpha", c.alpha},
             {"gamma_init", c.gamma_init},
             {"lambda_bits", c.lambda_bits},
             {"gamma_rate", c.gamma_rate},
             {"learning_rate", c.learning_rate},
             {"epochs", c.epochs},
             {"batch_size", c.batch_size},
             {"rng_seed", c.rng_seed},
             {"optimizer", to_string(c.optimizer)}};
}

void from_json(const json& j, TrainConfig& c) {
    TrainConfig d;
    c.alpha = j.value("alpha", d.alpha);
    c.gamma_init = j.value("gamma_init", d.gamma_init);
    c.lambda_bits = j.value("lambda_bits", d.lambda_bits);
    c.gamma_rate = j.value("gamma_rate", d.gamma_rate);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.rng_seed = j.value("rng_seed", d.rng_seed);
    c.optimizer = optimizer_from_string(j.value("optimizer", to_string(d.optimizer)));
}

namespace {

std::vector<const Parameter<float>*> all_tensors(const Model& model) {
    auto out = model.parameters();
    const auto buffers = model.buffers();
    out.insert(out.end(), buffers.begin(), buffers.end());
    return out;
}

void write_raw(std::ostream& out, const void* data, std::size_t bytes) {
    out.write(static_cast<const char*>(data), std::streamsize(bytes));
}

void read_raw(std::istream& in, void* data, std::size_t bytes, const char* what) {
    in.read(static_cast<char*>(data), std::streamsize(bytes));
    if (std::size_t(in.gcount()) != bytes) throw FormatError(std::string("checkpoint truncated in ") + what);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Model& model, const TrainConfig* train) {
    json header;
    header["model"] = model.config();
    header["seed"] = model.seed();
    if (train) header["train"] = *train;
    json table = json::array();
    for (const auto* p : all_tensors(model))
        table.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"dtype", "f32"}});
    table.push_back({{"name", "gamma"}, {"rows", model.gamma.size()}, {"cols", 1}, {"dtype", "f64"}});
    header["tensors"] = table;

    const std::string text = header.dump();
    const std::uint64_t length = text.size();
    write_raw(out, kCheckpointMagic.data(), kCheckpointMagic.size());
    write_raw(out, &length, sizeof length);
    write_raw(out, text.data(), text.size());
    for (const auto* p : all_tensors(model)) write_raw(out, p->value.data(), std::size_t(p->value.size()) * 4);
    write_raw(out, model.gamma.data(), std::size_t(model.gamma.size()) * 8);
    if (!out) throw Error("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
    std::string magic(kCheckpointMagic.size(), '\0');
    read_raw(in, magic.data(), magic.size(), "magic");
    if (magic != kCheckpointMagic) throw FormatError("not a formfunc checkpoint (bad magic)");
    std::uint64_t length = 0;
    read_raw(in, &length, sizeof length, "header length");
    if (length > (1u << 26)) throw FormatError("checkpoint header length implausible");
    std::string text(length, '\0');
    read_raw(in, text.data(), text.size(), "header");

    json header;
    try {
        header = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }

    Checkpoint ck;
    try {
        const auto config = header.at("model").get<ModelConfig>();
        ck.model = Model(config, header.at("seed").get<std::uint64_t>());
        if (header.contains("train")) ck.train = header["train"].get<TrainConfig>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint header malformed: ") + e.what());
    }

    std::map<std::string, Parameter<float>*> by_name;
    for (auto* p : ck.model.parameters()) by_name[p->name] = p;
    for (auto* p : ck.model.buffers()) by_name[p->name] = p;

    bool saw_gamma = false;
    std::size_t loaded = 0;
    for (const auto& t : header.at("tensors")) {
        const auto name = t.at("name").get<std::string>();
        const auto rows = t.at("rows").get<Eigen::Index>();
        const auto cols = t.at("cols").get<Eigen::Index>();
        if (name == "gamma") {
            if (rows != ck.model.latent_dim() || cols != 1) throw FormatError("checkpoint gamma has wrong length");
            ck.model.gamma.resize(rows);
            read_raw(in, ck.model.gamma.data(), std::size_t(rows) * 8, "gamma");
            saw_gamma = true;
            continue;
        }
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("checkpoint tensor '" + name + "' unknown to this model");
        auto& value = it->second->value;
        if (value.rows() != rows || value.cols() != cols)
            throw FormatError("checkpoint tensor '" + name + "' has mismatched shape");
        read_raw(in, value.data(), std::size_t(value.size()) * 4, name.c_str());
        ++loaded;
    }
    if (!saw_gamma || loaded != by_name.size()) throw FormatError("checkpoint is missing tensors");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainConfig* train) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write_checkpoint(out, model, train);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace formfunc
