#include "formfunc/arithmetic/arithmetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace formfunc {

ClassEssence class_essence(std::span<const LatentCode> codes, std::string class_label) {
    if (codes.empty()) throw Error("class_essence: no codes");
    const Eigen::Index J = codes.front().size();
    Eigen::VectorXd mean_sum = Eigen::VectorXd::Zero(J), var_sum = Eigen::VectorXd::Zero(J);
    for (const auto& c : codes) {
        c.validate();
        if (c.size() != J) throw ShapeError("class_essence: codes of mixed length");
        mean_sum += c.means;
        var_sum += c.variances();
    }
    const double n = double(codes.size());
    ClassEssence out;
    out.code = LatentCode(mean_sum / n, (var_sum / n).array().log().matrix());
    out.class_label = std::move(class_label);
    out.sample_count = int(codes.size());
    return out;
}

double gaussian_kl(double mean_p, double var_p, double mean_q, double var_q) {
    if (!(var_p > 0) || !(var_q > 0)) throw Error("gaussian_kl: variances must be > 0");
    const double d = mean_p - mean_q;
    return 0.5 * std::log(var_q / var_p) + (var_p + d * d) / (2 * var_q) - 0.5;
}

ImportanceVector importance_vector(const LatentCode& code, const LatentCode& void_code, double w_void) {
    code.validate();
    void_code.validate();
    if (code.size() != void_code.size()) throw ShapeError("importance_vector: length mismatch");
    if (!(w_void >= 0 && w_void <= 1)) throw Error("importance_vector: w_void must lie in [0, 1]");
    const Eigen::Index J = code.size();
    const Eigen::VectorXd var = code.variances(), void_var = void_code.variances();
    Eigen::VectorXd d_void(J), d_prior(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        d_void[j] = gaussian_kl(code.means[j], var[j], void_code.means[j], void_var[j]);
        d_prior[j] = gaussian_kl(code.means[j], var[j], 0.0, 1.0);
    }
    auto unit = [](Eigen::VectorXd v) {
        const double n = v.norm();
        if (n > 0) v /= n;
        return v;
    };
    ImportanceVector iv;
    iv.w_void = w_void;
    iv.w_prior = 1.0 - w_void;
    iv.scores = iv.w_void * unit(d_void) + iv.w_prior * unit(d_prior);
    return iv;
}

Eigen::Index mask_size(double percent, Eigen::Index J) {
    if (!(percent >= 0 && percent <= 1)) throw Error("importance percent must lie in [0, 1]");
    // The small slack keeps e.g. 0.3 * 10 from rounding up to 4.
    return std::clamp(Eigen::Index(std::ceil(percent * double(J) - 1e-9)), Eigen::Index(0), J);
}

Mask importance_mask(const ImportanceVector& iv, double percent) {
    const Eigen::Index J = iv.scores.size();
    const Eigen::Index n = mask_size(percent, J);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(J));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return iv.scores[a] > iv.scores[b]; });
    Mask mask = Mask::Constant(J, false);
    for (Eigen::Index i = 0; i < n; ++i) mask[order[std::size_t(i)]] = true;
    return mask;
}

LatentCode combine(const LatentCode& base, const LatentCode& top, const Mask& base_mask, const Mask& top_mask) {
    const Eigen::Index J = base.size();
    if (top.size() != J || base.log_variances.size() != J || top.log_variances.size() != J ||
        base_mask.size() != J || top_mask.size() != J)
        throw ShapeError("combine: length mismatch");
    LatentCode out = base;
    for (Eigen::Index j = 0; j < J; ++j) {
        if (top_mask[j] && base_mask[j]) {
            out.means[j] = 0.5 * (base.means[j] + top.means[j]);
            out.log_variances[j] =
                std::log(0.5 * (std::exp(base.log_variances[j]) + std::exp(top.log_variances[j])));
        } else if (top_mask[j]) {
            out.means[j] = top.means[j];
            out.log_variances[j] = top.log_variances[j];
        }
    }
    return out;
}

LatentCode combine(const CombineRequest& request, const ImportanceVector& base_iv, const ImportanceVector& top_iv) {
    return combine(request.base, request.top, importance_mask(base_iv, request.base_percent),
                   importance_mask(top_iv, request.top_percent));
}

std::vector<Neighbor> nearest_by_features(const Eigen::VectorXd& query, std::span<const Eigen::VectorXd> features,
                                          std::size_t k) {
    if (features.empty()) throw Error("nearest_in_dataset: empty dataset");
    if (k > features.size()) throw Error("nearest_in_dataset: k exceeds dataset size");
    std::vector<Neighbor> all;
    all.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != query.size()) throw ShapeError("nearest_in_dataset: feature length mismatch");
        all.push_back({i, (features[i] - query).norm()});
    }
    std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
    all.resize(k);
    return all;
}

std::vector<Neighbor> nearest_in_dataset(const LatentCode& query, std::span<const LatentCode> dataset,
                                         const Model& model, std::size_t k) {
    if (dataset.empty()) throw Error("nearest_in_dataset: empty dataset");
    std::vector<Eigen::VectorXd> features;
    features.reserve(dataset.size());
    for (const auto& c : dataset) features.push_back(model.decoder_features(c.means));
    return nearest_by_features(model.decoder_features(query.means), features, k);
}

}  // namespace formfunc
