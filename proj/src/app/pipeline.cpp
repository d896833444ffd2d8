#include "formfunc/app/pipeline.hpp"

#include <algorithm>

#include "formfunc/vae/checkpoint.hpp"

namespace formfunc {

AffordanceReport run_affordance_tests(const VoxelGrid& grid, const AffordanceOptions& options) {
    AffordanceReport r;
    r.support = supportability_test(grid, options.probe);
    r.contain = containability_test(grid, options.sphere_radius > 0 ? options.sphere_radius
                                                                    : default_sphere_radius(grid));
    return r;
}

nlohmann::json to_json(const AffordanceReport& report) {
    return {{"supportability", to_json(report.support)}, {"containability", to_json(report.contain)}};
}

Session::Session(Model model, Corpus corpus) : model_(std::move(model)), corpus_(std::move(corpus)) {
    const int dim = model_.config().input_dim;
    if (corpus_.dim != 0 && corpus_.dim != dim)
        throw Error("corpus dim " + std::to_string(corpus_.dim) + " differs from model input_dim " +
                    std::to_string(dim));
    VoxelGrid empty(dim);
    if (!corpus_.shapes.empty()) {
        empty.translate = corpus_.shapes.front().grid.translate;
        empty.scale = corpus_.shapes.front().grid.scale;
    }
    void_code_ = model_.encode(empty);
}

std::shared_ptr<Session> Session::load(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus) {
    return std::make_shared<Session>(load_checkpoint(checkpoint).model, read_corpus(corpus));
}

bool Session::has_class(const std::string& label) const {
    return std::any_of(corpus_.classes.begin(), corpus_.classes.end(),
                       [&](const ClassInfo& c) { return c.label == label; });
}

std::shared_ptr<const EssenceEntry> Session::essence(const std::string& label) const {
    std::lock_guard lock(mutex_);
    if (auto it = essences_.find(label); it != essences_.end()) return it->second;
    if (!has_class(label)) throw NotFound("unknown class '" + label + "'");
    std::vector<LatentCode> codes;
    for (const auto& s : corpus_.shapes)
        if (s.class_label == label) codes.push_back(model_.encode(s.grid));
    if (codes.empty()) throw NotFound("class '" + label + "' has no samples in the corpus");
    auto entry = std::make_shared<EssenceEntry>();
    entry->essence = class_essence(codes, label);
    entry->importance = importance_vector(entry->essence.code, void_code_);
    essences_.emplace(label, entry);
    return entry;
}

ProbabilityGrid Session::decode(const LatentCode& code) const {
    ProbabilityGrid p = model_.decode(code.means);
    if (!corpus_.shapes.empty()) {
        p.translate = corpus_.shapes.front().grid.translate;
        p.scale = corpus_.shapes.front().grid.scale;
    }
    return p;
}

const std::vector<Eigen::VectorXd>& Session::corpus_features() const {
    std::lock_guard lock(mutex_);
    if (!features_ready_) {
        for (const auto& s : corpus_.shapes) features_.push_back(model_.decoder_features(model_.encode(s.grid).means));
        features_ready_ = true;
    }
    return features_;
}

Design Session::combine(const std::string& base, const std::string& top, double base_percent, double top_percent,
                        const AffordanceOptions& options, std::size_t neighbors) const {
    mask_size(base_percent, 1);
    mask_size(top_percent, 1);
    const auto b = essence(base);
    const auto t = essence(top);
    Design d;
    d.base = base;
    d.top = top;
    d.code = formfunc::combine(CombineRequest{b->essence.code, t->essence.code, base_percent, top_percent},
                               b->importance, t->importance);
    d.probabilities = decode(d.code);
    d.grid = threshold(d.probabilities, 0.5f);
    d.report = run_affordance_tests(d.grid, options);
    const auto& features = corpus_features();
    if (!features.empty())
        d.nearest = nearest_by_features(model_.decoder_features(d.code.means), features,
                                        std::min(neighbors, features.size()));
    return d;
}

std::pair<std::string, std::string> Session::resolve(const std::vector<std::string>& affordances,
                                                     const std::optional<std::string>& base,
                                                     const std::optional<std::string>& top) const {
    if (affordances.empty()) throw Error("request: at least one affordance is required");
    if (affordances.size() > 2) throw Error("request: at most two affordances are supported per request");
    std::vector<std::string> picks;
    for (std::size_t i = 0; i < affordances.size(); ++i) {
        const auto& override_label = i == 0 ? base : top;
        if (override_label) {
            if (!has_class(*override_label)) throw NotFound("unknown class '" + *override_label + "'");
            picks.push_back(*override_label);
            continue;
        }
        const auto candidates = classes_with(corpus_.classes, affordances[i]);
        if (candidates.empty()) {
            std::string known;
            for (const auto& c : corpus_.classes)
                for (const auto& a : c.affordances) known += (known.empty() ? "" : ", ") + a;
            throw Error("no class provides '" + affordances[i] + "' (known affordances: " + known + ")");
        }
        if (candidates.size() > 1) {
            std::string list;
            for (const auto& c : candidates) list += (list.empty() ? "" : ", ") + c;
            throw Error("affordance '" + affordances[i] + "' is provided by several classes (" + list +
                        "); choose with --base/--top");
        }
        picks.push_back(candidates.front());
    }
    if (picks.size() == 1) picks.push_back(top.value_or(picks.front()));
    return {picks[0], picks[1]};
}

nlohmann::json importance_histogram(const ImportanceVector& iv, int bins) {
    const double hi = iv.scores.size() ? iv.scores.maxCoeff() : 0.0;
    std::vector<int> counts(std::size_t(bins), 0);
    for (Eigen::Index j = 0; j < iv.scores.size(); ++j) {
        int b = hi > 0 ? int(iv.scores[j] / hi * bins) : 0;
        counts[std::size_t(std::clamp(b, 0, bins - 1))]++;
    }
    return {{"min", 0.0}, {"max", hi}, {"counts", counts}};
}

}  // namespace formfunc
