#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "formfunc/vae/model.hpp"

namespace formfunc {

struct ClassEssence {
    LatentCode code;
    std::string class_label;
    int sample_count = 0;
};

/// Component-wise average of posterior codes. Means are averaged directly,
/// variances are averaged as variances (not log-variances).
ClassEssence class_essence(std::span<const LatentCode> codes, std::string class_label = {});

/// KL(p || q) between two univariate Gaussians given as (mean, variance).
double gaussian_kl(double mean_p, double var_p, double mean_q, double var_q);

struct ImportanceVector {
    Eigen::VectorXd scores;
    double w_void = 2.0 / 3.0;
    double w_prior = 1.0 / 3.0;
};

/// scores = w_void * d_void / |d_void| + w_prior * d_prior / |d_prior|, where
/// d_void[j] = KL(code_j || void_j) and d_prior[j] = KL(code_j || N(0, 1)).
/// A zero vector stays zero instead of being normalized.
ImportanceVector importance_vector(const LatentCode& code, const LatentCode& void_code, double w_void = 2.0 / 3.0);

using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Number of components selected by a top-`percent` mask over J latents.
Eigen::Index mask_size(double percent, Eigen::Index J);

/// True for the ceil(percent * J) highest scores; ties go to the lower index.
Mask importance_mask(const ImportanceVector& iv, double percent);

struct CombineRequest {
    LatentCode base;
    LatentCode top;
    double base_percent = 0.5;
    double top_percent = 0.5;
};

/// Per component: the top value where only the top is important, the
/// average of means and of variances where both are, the base value
/// otherwise.
LatentCode combine(const LatentCode& base, const LatentCode& top, const Mask& base_mask, const Mask& top_mask);
LatentCode combine(const CombineRequest& request, const ImportanceVector& base_iv, const ImportanceVector& top_iv);

struct Neighbor {
    std::size_t index = 0;
    double distance = 0;

    bool operator==(const Neighbor&) const = default;
};

/// The k rows of `features` closest to `query` in Euclidean distance,
/// ascending, ties by lower index.
std::vector<Neighbor> nearest_by_features(const Eigen::VectorXd& query, std::span<const Eigen::VectorXd> features,
                                          std::size_t k);

/// Compares codes through the decoder's one-before-last layer activations,
/// evaluated at the code means.
std::vector<Neighbor> nearest_in_dataset(const LatentCode& query, std::span<const LatentCode> dataset,
                                         const Model& model, std::size_t k);

}  // namespace formfunc
