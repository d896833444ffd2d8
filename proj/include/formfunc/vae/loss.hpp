#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "formfunc/vae/config.hpp"
#include "formfunc/voxcore/grid.hpp"

namespace formfunc {

/// Probabilities are clipped to [kProbabilityEpsilon, 1 - kProbabilityEpsilon]
/// before taking logarithms.
inline constexpr double kProbabilityEpsilon = 1e-7;

/// -(alpha * x * log p + (1 - x) * log(1 - p)) for a single voxel, p clipped.
template <typename Scalar>
Scalar weighted_bce_term(Scalar x, Scalar p, Scalar alpha) {
    const Scalar eps = Scalar(kProbabilityEpsilon);
    p = std::clamp(p, eps, Scalar(1) - eps);
    return -(alpha * x * std::log(p) + (Scalar(1) - x) * std::log(Scalar(1) - p));
}

/// Weighted binary cross-entropy summed over voxels. With alpha = 1 this is
/// the plain (non-weighted) reconstruction loss.
double recon_loss(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x_prob,
                  double alpha);
double recon_loss(const VoxelGrid& x, const ProbabilityGrid& x_prob, double alpha);

/// KL divergence of each posterior component N(mu_j, sigma_j^2) from the
/// unit Gaussian prior: -1/2 (1 + log sigma^2 - mu^2 - sigma^2).
Eigen::VectorXd kl_components(const LatentCode& code);

/// z = mu + sigma * noise.
Eigen::VectorXd reparameterize(const LatentCode& code, const Eigen::Ref<const Eigen::VectorXd>& noise);

struct SoftFreeBitsStep {
    double regularizer = 0;  // sum_j gamma_j KL_j, with gamma before the update
    Eigen::VectorXd gamma;   // updated weights
};

/// One soft-free-bits adjustment. Components whose KL is below
/// `lambda_bits` get gamma_j *= (1 - rate), never below `gamma_floor`;
/// the others get gamma_j *= (1 + rate), never above 1.
SoftFreeBitsStep soft_free_bits_step(const Eigen::Ref<const Eigen::VectorXd>& kl,
                                     const Eigen::Ref<const Eigen::VectorXd>& gamma, double lambda_bits,
                                     double rate, double gamma_floor);

}  // namespace formfunc
