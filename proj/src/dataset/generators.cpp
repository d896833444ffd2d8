#include <algorithm>
#include <random>

#include "formfunc/dataset/dataset.hpp"

namespace formfunc {

void ClassSpec::validate() const {
    if (label.empty()) throw Error("class spec needs a label");
    if (affordances.empty()) throw Error("class '" + label + "' has no affordances");
    if (dim < 8) throw Error("class '" + label + "': dim must be >= 8");
    if (!(scale > 0)) throw Error("class '" + label + "': scale must be > 0");
    for (const IntRange& r : {half_width, half_depth, height, thickness, leg, extra})
        if (r.lo < 1 || r.hi < r.lo) throw Error("class '" + label + "': empty or non-positive parameter range");
    if (2 * half_width.hi > dim || 2 * half_depth.hi > dim || height.hi > dim)
        throw Error("class '" + label + "': parameter ranges exceed the grid");
    switch (kind) {
    case ShapeKind::table:
        if (thickness.hi >= height.lo || 2 * leg.hi > std::min(2 * half_width.lo, 2 * half_depth.lo))
            throw Error("class '" + label + "': slab or legs do not fit");
        break;
    case ShapeKind::chair:
        if (height.hi + extra.hi > dim || thickness.hi >= height.lo || 2 * leg.hi > 2 * half_depth.lo - thickness.hi)
            throw Error("class '" + label + "': chair does not fit");
        break;
    case ShapeKind::tub:
        if (2 * thickness.hi >= 2 * std::min(half_width.lo, half_depth.lo) || thickness.hi >= height.lo)
            throw Error("class '" + label + "': tub walls leave no cavity");
        break;
    case ShapeKind::monitor:
        if (height.hi + extra.hi > dim || leg.hi > 2 * half_width.lo || thickness.hi > 2 * half_depth.lo)
            throw Error("class '" + label + "': monitor does not fit");
        break;
    }
}

const std::vector<ClassSpec>& builtin_classes() {
    static const std::vector<ClassSpec> classes = [] {
        std::vector<ClassSpec> c(4);
        c[0].label = "table";
        c[0].affordances = {"support-ability"};
        c[0].kind = ShapeKind::table;
        c[0].half_width = {8, 12};
        c[0].half_depth = {6, 11};
        c[0].height = {16, 18};
        c[0].thickness = {2, 3};
        c[0].leg = {2, 3};

        c[1].label = "chair";
        c[1].affordances = {"sit-ability", "lean-ability"};
        c[1].kind = ShapeKind::chair;
        c[1].half_width = {6, 8};
        c[1].half_depth = {6, 8};
        c[1].height = {9, 11};
        c[1].thickness = {2, 2};
        c[1].leg = {2, 2};
        c[1].extra = {8, 11};

        c[2].label = "tub";
        c[2].affordances = {"contain-ability", "wash-ability"};
        c[2].kind = ShapeKind::tub;
        c[2].half_width = {8, 12};
        c[2].half_depth = {5, 8};
        c[2].height = {8, 11};
        c[2].thickness = {2, 2};

        c[3].label = "monitor";
        c[3].affordances = {"display-ability"};
        c[3].kind = ShapeKind::monitor;
        c[3].half_width = {8, 12};
        c[3].half_depth = {3, 5};
        c[3].height = {10, 14};
        c[3].thickness = {2, 2};
        c[3].leg = {2, 3};
        c[3].extra = {4, 6};
        for (const auto& s : c) s.validate();
        return c;
    }();
    return classes;
}

const ClassSpec& find_class(std::span<const ClassSpec> table, const std::string& label) {
    for (const auto& c : table)
        if (c.label == label) return c;
    std::string known;
    for (const auto& c : table) known += (known.empty() ? "" : ", ") + c.label;
    throw Error("unknown class '" + label + "' (known: " + known + ")");
}

namespace {

/// Axis-aligned builder in a frame centered on the grid's column axis;
/// x and z are offsets from the center, y is absolute.
class Builder {
public:
    explicit Builder(int dim) : grid_(dim) {}

    // Half-open box [x0, x1) x [y0, y1) x [z0, z1), x and z relative to center.
    void box(int x0, int x1, int y0, int y1, int z0, int z1) {
        const int c = grid_.dim / 2;
        for (int y = std::max(0, y0); y < std::min(grid_.dim, y1); ++y)
            for (int z = std::max(0, c + z0); z < std::min(grid_.dim, c + z1); ++z)
                for (int x = std::max(0, c + x0); x < std::min(grid_.dim, c + x1); ++x) grid_(x, y, z) = 1;
    }

    /// Shifts the occupied bounding box to the middle of the grid.
    VoxelGrid centered(double scale) {
        const int d = grid_.dim;
        int lo[3] = {d, d, d}, hi[3] = {-1, -1, -1};
        for (int y = 0; y < d; ++y)
            for (int z = 0; z < d; ++z)
                for (int x = 0; x < d; ++x)
                    if (grid_(x, y, z)) {
                        const int p[3] = {x, y, z};
                        for (int a = 0; a < 3; ++a) lo[a] = std::min(lo[a], p[a]), hi[a] = std::max(hi[a], p[a]);
                    }
        VoxelGrid out(d, scale, Eigen::Vector3d::Constant(-scale / 2));
        int shift[3];
        for (int a = 0; a < 3; ++a) shift[a] = (d - 1 - hi[a] - lo[a]) / 2;
        for (int y = lo[1]; y <= hi[1]; ++y)
            for (int z = lo[2]; z <= hi[2]; ++z)
                for (int x = lo[0]; x <= hi[0]; ++x)
                    if (grid_(x, y, z)) out(x + shift[0], y + shift[1], z + shift[2]) = 1;
        return out;
    }

private:
    VoxelGrid grid_;
};

int draw(std::mt19937_64& rng, IntRange r) { return std::uniform_int_distribution<int>(r.lo, r.hi)(rng); }

VoxelGrid make_table(const ClassSpec& s, std::mt19937_64& rng) {
    const int a = draw(rng, s.half_width), b = draw(rng, s.half_depth), H = draw(rng, s.height);
    const int t = draw(rng, s.thickness), leg = draw(rng, s.leg);
    Builder g(s.dim);
    g.box(-a, a, H - t, H, -b, b);
    for (int sx : {-1, 1})
        for (int sz : {-1, 1}) {
            const int x0 = sx < 0 ? -a : a - leg, z0 = sz < 0 ? -b : b - leg;
            g.box(x0, x0 + leg, 0, H - t, z0, z0 + leg);
        }
    return g.centered(s.scale);
}

VoxelGrid make_chair(const ClassSpec& s, std::mt19937_64& rng) {
    const int a = draw(rng, s.half_width), b = draw(rng, s.half_depth), H = draw(rng, s.height);
    const int t = draw(rng, s.thickness), leg = draw(rng, s.leg), back = draw(rng, s.extra);
    Builder g(s.dim);
    g.box(-a, a, H - t, H, -b, b);         // seat
    g.box(-a, a, H, H + back, -b, -b + t);  // backrest along the low-z edge
    for (int sx : {-1, 1})
        for (int sz : {-1, 1}) {
            const int x0 = sx < 0 ? -a : a - leg, z0 = sz < 0 ? -b : b - leg;
            g.box(x0, x0 + leg, 0, H - t, z0, z0 + leg);
        }
    return g.centered(s.scale);
}

VoxelGrid make_tub(const ClassSpec& s, std::mt19937_64& rng) {
    const int a = draw(rng, s.half_width), b = draw(rng, s.half_depth), H = draw(rng, s.height);
    const int t = draw(rng, s.thickness);
    Builder g(s.dim);
    g.box(-a, a, 0, t, -b, b);          // floor
    g.box(-a, -a + t, t, H, -b, b);      // walls
    g.box(a - t, a, t, H, -b, b);
    g.box(-a + t, a - t, t, H, -b, -b + t);
    g.box(-a + t, a - t, t, H, b - t, b);
    return g.centered(s.scale);
}

VoxelGrid make_monitor(const ClassSpec& s, std::mt19937_64& rng) {
    const int a = draw(rng, s.half_width), base_b = draw(rng, s.half_depth), H = draw(rng, s.height);
    const int t = draw(rng, s.thickness), neck = draw(rng, s.leg), stand = draw(rng, s.extra);
    Builder g(s.dim);
    const int base_a = std::max(neck, a / 2);
    g.box(-base_a, base_a, 0, 1, -base_b, base_b);                   // base plate
    g.box(-neck / 2 - neck % 2, neck / 2, 1, stand, -1, 1);           // neck
    g.box(-a, a, stand, stand + H, -t / 2 - t % 2, t / 2);            // screen
    return g.centered(s.scale);
}

std::uint64_t label_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
    return h;
}

}  // namespace

std::vector<LabeledShape> generate_class(const ClassSpec& spec, int n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw Error("generate_class: n must be >= 1");
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(label_hash(spec.label)),
                      std::uint32_t(label_hash(spec.label) >> 32)};
    std::mt19937_64 rng(seq);
    std::vector<LabeledShape> out;
    out.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        LabeledShape s;
        switch (spec.kind) {
        case ShapeKind::table: s.grid = make_table(spec, rng); break;
        case ShapeKind::chair: s.grid = make_chair(spec, rng); break;
        case ShapeKind::tub: s.grid = make_tub(spec, rng); break;
        case ShapeKind::monitor: s.grid = make_monitor(spec, rng); break;
        }
        s.class_label = spec.label;
        s.affordances = spec.affordances;
        s.source = ShapeSource::procedural;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace formfunc
