#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "formfunc/affordlab/affordlab.hpp"
#include "formfunc/arithmetic/arithmetic.hpp"
#include "formfunc/dataset/corpus.hpp"
#include "formfunc/vae/model.hpp"

namespace formfunc {

/// Lookup of something that does not exist (unknown class label, ...).
class NotFound : public Error {
public:
    using Error::Error;
};

struct EssenceEntry {
    ClassEssence essence;
    ImportanceVector importance;
};

struct AffordanceOptions {
    CubeProbe probe;
    /// Physical sphere radius; 0 selects default_sphere_radius.
    double sphere_radius = 0;
};

struct AffordanceReport {
    SupportabilityMap support;
    ContainabilityResult contain;
};

AffordanceReport run_affordance_tests(const VoxelGrid& grid, const AffordanceOptions& options);
nlohmann::json to_json(const AffordanceReport& report);

struct Design {
    std::string base;
    std::string top;
    LatentCode code;
    ProbabilityGrid probabilities;
    VoxelGrid grid;
    AffordanceReport report;
    std::vector<Neighbor> nearest;  // into Session::corpus().shapes
};

/// A loaded model with its corpus. Inference never mutates the model, and
/// class essences are computed on first use and then kept, so one Session
/// can serve concurrent readers.
class Session {
public:
    Session(Model model, Corpus corpus);

    static std::shared_ptr<Session> load(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus);

    const Model& model() const { return model_; }
    const Corpus& corpus() const { return corpus_; }
    /// Code of the all-empty grid.
    const LatentCode& void_code() const { return void_code_; }

    bool has_class(const std::string& label) const;
    /// Essence over the class's (un-augmented) corpus samples. Throws NotFound.
    std::shared_ptr<const EssenceEntry> essence(const std::string& label) const;

    ProbabilityGrid decode(const LatentCode& code) const;

    /// essence(base) combined with essence(top), decoded at the means,
    /// thresholded at 0.5, tested, and matched against the corpus.
    Design combine(const std::string& base, const std::string& top, double base_percent, double top_percent,
                   const AffordanceOptions& options = {}, std::size_t neighbors = 2) const;

    /// Resolves requested affordances to (base, top) classes: the first
    /// affordance picks the base, the second (or the first again) the top.
    /// Explicit overrides win; an ambiguous or unknown affordance is an Error
    /// listing the candidates.
    std::pair<std::string, std::string> resolve(const std::vector<std::string>& affordances,
                                                const std::optional<std::string>& base = {},
                                                const std::optional<std::string>& top = {}) const;

private:
    const std::vector<Eigen::VectorXd>& corpus_features() const;

    Model model_;
    Corpus corpus_;
    LatentCode void_code_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::shared_ptr<const EssenceEntry>> essences_;
    mutable std::vector<Eigen::VectorXd> features_;
    mutable bool features_ready_ = false;
};

/// Counts of importance scores in `bins` equal bins over [0, max score].
nlohmann::json importance_histogram(const ImportanceVector& iv, int bins = 10);

}  // namespace formfunc
