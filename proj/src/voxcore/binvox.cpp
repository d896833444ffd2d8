#include "formfunc/voxcore/binvox.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

namespace formfunc {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

std::vector<std::pair<std::uint8_t, std::uint8_t>> run_length_encode(const VoxelGrid& grid) {
    validate(grid);
    std::vector<std::pair<std::uint8_t, std::uint8_t>> runs;
    const auto& v = grid.values;
    Eigen::Index i = 0;
    while (i < v.size()) {
        const std::uint8_t value = v[i] ? 1 : 0;
        int count = 0;
        while (i < v.size() && (v[i] ? 1 : 0) == value && count < 255) {
            ++count;
            ++i;
        }
        runs.emplace_back(value, std::uint8_t(count));
    }
    return runs;
}

void run_length_decode(const std::vector<std::pair<std::uint8_t, std::uint8_t>>& runs, VoxelGrid& grid) {
    const Eigen::Index total = grid.voxel_count();
    Eigen::Index pos = 0;
    for (const auto& [value, count] : runs) {
        if (count == 0) throw FormatError("binvox: zero-length run");
        if (pos + count > total) throw FormatError("binvox: run lengths exceed dim^3");
        grid.values.segment(pos, count).setConstant(value ? 1 : 0);
        pos += count;
    }
    if (pos != total)
        throw FormatError("binvox: run lengths sum to " + std::to_string(pos) + ", expected " +
                          std::to_string(total));
}

Bytes write_binvox(const VoxelGrid& grid) {
    validate(grid);
    std::ostringstream header;
    const std::string d = std::to_string(grid.dim);
    header << "#binvox 1\n"
           << "dim " << d << ' ' << d << ' ' << d << '\n'
           << "translate " << format_double(grid.translate.x()) << ' ' << format_double(grid.translate.y()) << ' '
           << format_double(grid.translate.z()) << '\n'
           << "scale " << format_double(grid.scale) << '\n'
           << "data\n";
    const std::string text = header.str();
    Bytes out(text.begin(), text.end());
    for (const auto& [value, count] : run_length_encode(grid)) {
        out.push_back(value);
        out.push_back(count);
    }
    return out;
}

namespace {

double parse_double(const std::string& tok) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) throw FormatError("binvox: bad number '" + tok + "'");
    return value;
}

}  // namespace

VoxelGrid read_binvox(const Bytes& bytes) {
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string {
        const std::size_t start = pos;
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        if (pos >= bytes.size()) throw FormatError("binvox: truncated header");
        std::string line(bytes.begin() + std::ptrdiff_t(start), bytes.begin() + std::ptrdiff_t(pos));
        ++pos;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    {
        std::istringstream magic(next_line());
        std::string tag;
        int version = 0;
        if (!(magic >> tag >> version) || tag != "#binvox" || version != 1)
            throw FormatError("binvox: bad magic line");
    }

    int dim = 0;
    Eigen::Vector3d translate = Eigen::Vector3d::Zero();
    double scale = 1.0;
    for (;;) {
        std::istringstream line(next_line());
        std::string key;
        line >> key;
        if (key == "data") break;
        if (key == "dim") {
            int a = 0, b = 0, c = 0;
            if (!(line >> a >> b >> c)) throw FormatError("binvox: bad dim line");
            if (a != b || b != c) throw FormatError("binvox: only cubic grids are supported");
            dim = a;
        } else if (key == "translate") {
            std::string t[3];
            if (!(line >> t[0] >> t[1] >> t[2])) throw FormatError("binvox: bad translate line");
            translate = {parse_double(t[0]), parse_double(t[1]), parse_double(t[2])};
        } else if (key == "scale") {
            std::string s;
            if (!(line >> s)) throw FormatError("binvox: bad scale line");
            scale = parse_double(s);
        } else if (!key.empty()) {
            throw FormatError("binvox: unknown header field '" + key + "'");
        }
    }
    if (dim < 1) throw FormatError("binvox: missing or invalid dim");
    if (!(scale > 0)) throw FormatError("binvox: scale must be positive");

    const std::size_t payload = bytes.size() - pos;
    if (payload % 2 != 0) throw FormatError("binvox: truncated run-length stream");
    std::vector<std::pair<std::uint8_t, std::uint8_t>> runs;
    runs.reserve(payload / 2);
    for (std::size_t i = pos; i < bytes.size(); i += 2) runs.emplace_back(bytes[i], bytes[i + 1]);

    VoxelGrid grid(dim, scale, translate);
    run_length_decode(runs, grid);
    return grid;
}

void save_binvox(const std::filesystem::path& path, const VoxelGrid& grid) {
    const Bytes bytes = write_binvox(grid);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

VoxelGrid load_binvox(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_binvox(bytes);
}

}  // namespace formfunc
