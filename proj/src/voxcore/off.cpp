#include <charconv>
#include <cmath>
#include <sstream>

#include "formfunc/error.hpp"
#include "formfunc/voxcore/mesh.hpp"

namespace formfunc {

namespace {

// Pulls non-blank, comment-stripped lines and splits them into tokens.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            tokens.clear();
            std::istringstream ss(line);
            for (std::string tok; ss >> tok;) tokens.push_back(tok);
            if (!tokens.empty()) return true;
        }
        return false;
    }

    std::size_t line() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

template <typename T>
T parse_number(const std::string& tok, std::size_t line, const char* what) {
    T value{};
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw ParseError(line, std::string("bad ") + what + " '" + tok + "'");
    return value;
}

}  // namespace

TriMesh parse_off(std::istream& in) {
    LineReader reader(in);
    std::vector<std::string> tok;
    if (!reader.next(tok)) throw ParseError(reader.line() + 1, "missing OFF header");

    // Some exporters glue the counts onto the header ("OFF1024 2048 0").
    std::vector<std::string> counts;
    const std::string& head = tok.front();
    if (head.rfind("OFF", 0) != 0) throw ParseError(reader.line(), "missing OFF header");
    if (head.size() > 3) counts.push_back(head.substr(3));
    counts.insert(counts.end(), tok.begin() + 1, tok.end());
    if (counts.empty()) {
        if (!reader.next(tok)) throw ParseError(reader.line() + 1, "missing vertex/face counts");
        counts = tok;
    }
    const std::size_t counts_line = reader.line();
    if (counts.size() < 2) throw ParseError(counts_line, "expected vertex and face counts");
    const long nv = parse_number<long>(counts[0], counts_line, "vertex count");
    const long nf = parse_number<long>(counts[1], counts_line, "face count");
    if (nv < 0 || nf < 0) throw ParseError(counts_line, "negative element count");

    TriMesh mesh;
    mesh.vertices.reserve(std::size_t(nv));
    for (long i = 0; i < nv; ++i) {
        if (!reader.next(tok))
            throw ParseError(reader.line() + 1, "count mismatch: expected " + std::to_string(nv) +
                                                    " vertices, found " + std::to_string(i));
        if (tok.size() < 3) throw ParseError(reader.line(), "vertex needs 3 coordinates");
        Eigen::Vector3d v;
        for (int k = 0; k < 3; ++k) v[k] = parse_number<double>(tok[k], reader.line(), "coordinate");
        if (!v.allFinite()) throw ParseError(reader.line(), "non-finite coordinate");
        mesh.vertices.push_back(v);
    }

    for (long f = 0; f < nf; ++f) {
        if (!reader.next(tok))
            throw ParseError(reader.line() + 1, "count mismatch: expected " + std::to_string(nf) +
                                                    " faces, found " + std::to_string(f));
        const long n = parse_number<long>(tok[0], reader.line(), "face size");
        if (n < 3) throw ParseError(reader.line(), "face has fewer than 3 vertices");
        if (long(tok.size()) - 1 < n) throw ParseError(reader.line(), "count mismatch: face lists too few indices");
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (long k = 0; k < n; ++k) {
            const long v = parse_number<long>(tok[std::size_t(k + 1)], reader.line(), "vertex index");
            if (v < 0 || v >= nv)
                throw ParseError(reader.line(), "vertex index " + std::to_string(v) + " out of range");
            idx[std::size_t(k)] = int(v);
        }
        for (long k = 1; k + 1 < n; ++k) {
            const Eigen::Vector3i t(idx[0], idx[std::size_t(k)], idx[std::size_t(k + 1)]);
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
            mesh.triangles.push_back(t);
        }
    }

    if (reader.next(tok)) throw ParseError(reader.line(), "count mismatch: trailing data after last face");
    return mesh;
}

TriMesh parse_off_string(const std::string& text) {
    std::istringstream in(text);
    return parse_off(in);
}

void validate(const TriMesh& mesh) {
    const int n = int(mesh.vertices.size());
    for (const auto& t : mesh.triangles) {
        if ((t.array() < 0).any() || (t.array() >= n).any()) throw ShapeError("triangle index out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw ShapeError("triangle repeats a vertex index");
    }
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> bounds(const TriMesh& mesh) {
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(INFINITY);
    Eigen::Vector3d hi = Eigen::Vector3d::Constant(-INFINITY);
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return {lo, hi};
}

}  // namespace formfunc
