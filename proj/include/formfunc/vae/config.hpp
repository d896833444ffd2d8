#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace formfunc {

/// Shape of the autoencoder. Desk-scale defaults; the full-size network
/// (64^3 input, 2048 latents) is the same family with larger numbers.
struct ModelConfig {
    int input_dim = 32;
    int latent_dim = 64;
    /// Encoder feature widths per downsampling block; the decoder mirrors them.
    std::vector<int> channel_widths{8, 16, 32};
    /// Concatenate earlier activations (max-pool aligned in the encoder,
    /// depth-to-space aligned in the decoder) onto each block's output.
    bool stack_dense = true;

    int levels() const { return int(channel_widths.size()); }
    /// Edge of the coarsest feature volume: input_dim / 2^levels.
    int base_edge() const { return input_dim >> levels(); }

    /// Throws ShapeError when the invariants do not hold.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
    /// Weight of filled voxels in the reconstruction term.
    double alpha = 10.0;
    /// Initial (and minimum) per-component regularizer weight.
    double gamma_init = 0.01;
    /// Per-component KL target of the soft free bits schedule.
    double lambda_bits = 0.1;
    /// Multiplicative gamma adjustment per optimizer step.
    double gamma_rate = 0.05;
    double learning_rate = 2e-3;
    int epochs = 30;
    int batch_size = 16;
    std::uint64_t rng_seed = 1;
    Optimizer optimizer = Optimizer::adam;

    void validate() const;
};

/// Posterior parameters emitted by the encoder for one shape.
struct LatentCode {
    Eigen::VectorXd means;
    Eigen::VectorXd log_variances;

    LatentCode() = default;
    LatentCode(Eigen::VectorXd mu, Eigen::VectorXd log_var) : means(std::move(mu)), log_variances(std::move(log_var)) {}

    Eigen::Index size() const { return means.size(); }
    Eigen::VectorXd variances() const { return log_variances.array().exp().matrix(); }

    /// Throws ShapeError on length mismatch or non-finite entries.
    void validate() const;

    bool operator==(const LatentCode& other) const {
        return means.size() == other.means.size() && log_variances.size() == other.log_variances.size() &&
               means == other.means && log_variances == other.log_variances;
    }
};

std::string to_string(Optimizer optimizer);
Optimizer optimizer_from_string(const std::string& name);

}  // namespace formfunc
