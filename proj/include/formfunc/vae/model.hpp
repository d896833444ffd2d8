#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "formfunc/vae/config.hpp"
#include "formfunc/vae/ops.hpp"
#include "formfunc/voxcore/grid.hpp"

namespace formfunc {

template <typename Scalar>
struct Parameter {
    std::string name;
    ops::Mat<Scalar> value;
    ops::Mat<Scalar> grad;
};

/// Which statistics batch-normalization layers normalize with.
enum class NormMode { batch, running };

/// Sums of per-layer batch statistics, used to re-estimate the running
/// statistics after training.
struct NormAccumulator {
    std::vector<Eigen::VectorXd> mean_sum;
    std::vector<Eigen::VectorXd> var_sum;
    int batches = 0;
};

struct PassOptions {
    NormMode norm = NormMode::batch;
    bool gradients = false;
    /// When > 0 and norm == batch, running statistics move towards the
    /// batch statistics by this factor.
    double momentum = 0.0;
    NormAccumulator* accumulate = nullptr;
};

struct LossBreakdown {
    double total = 0;           // batch mean of reconstruction + sum_j gamma_j KL_j
    double reconstruction = 0;  // batch mean
    double regularizer = 0;     // batch mean of sum_j gamma_j KL_j
    Eigen::VectorXd kl_mean;    // per-component KL, batch mean
    double predicted_occupancy = 0;  // fraction of output voxels with p >= 0.5
};

/// Convolutional variational autoencoder over cubic occupancy grids.
///
/// Encoder: per level a stride-2 3x3x3 convolution, ReLU and batch
/// normalization; with dense stacking the block input is max-pooled and
/// concatenated onto the block output. A pointwise convolution then emits
/// 2J channels and a reduce-max over positions yields (mu, log sigma^2).
///
/// Decoder: a dense layer maps z to the coarsest volume (ReLU + batch
/// norm); each level upsamples (nearest), convolves, applies ReLU and batch
/// norm, and with dense stacking concatenates the depth-to-space reshaped
/// block input. A final upsampling 3x3x3 convolution and a sigmoid give the
/// occupancy probabilities. The volume feeding that last convolution is the
/// decoder's one-before-last layer.
template <typename Scalar>
class Vae {
public:
    using Mat = ops::Mat<Scalar>;
    using Vec = ops::Vec<Scalar>;

    Vae() = default;
    explicit Vae(const ModelConfig& config, std::uint64_t seed = 1, double gamma_init = 0.01);

    const ModelConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    int latent_dim() const { return config_.latent_dim; }

    /// Soft free bits weight per latent component.
    Eigen::VectorXd gamma;

    // Inference: deterministic, batch norm uses running statistics.
    LatentCode encode(const VoxelGrid& grid) const;
    ProbabilityGrid decode(const Eigen::VectorXd& z) const;
    /// Flattened activations of the decoder's one-before-last layer.
    Eigen::VectorXd decoder_features(const Eigen::VectorXd& z) const;

    /// Forward pass of the training objective over a batch with the given
    /// reparameterization noise (one length-J vector per sample). With
    /// `options.gradients` the parameter gradients of the batch-mean
    /// objective are accumulated into each Parameter::grad.
    LossBreakdown evaluate(std::span<const VoxelGrid> batch, std::span<const Eigen::VectorXd> noise, double alpha,
                           const PassOptions& options);

    void zero_grad();
    std::vector<Parameter<Scalar>*> parameters();
    std::vector<const Parameter<Scalar>*> parameters() const;
    /// Batch-norm running means and variances.
    std::vector<Parameter<Scalar>*> buffers();
    std::vector<const Parameter<Scalar>*> buffers() const;
    Eigen::Index parameter_count() const;

    /// Replaces running statistics with the averages held in `acc`.
    void load_norm_statistics(const NormAccumulator& acc);

    template <typename Other>
    Vae<Other> cast() const;

private:
    template <typename>
    friend class Vae;

    struct Conv {
        Parameter<Scalar> weight, bias;
        int kernel = 3, stride = 1, up = 1;
    };
    struct Norm {
        Parameter<Scalar> gamma, beta, mean, var;
    };
    struct Block {
        Conv conv;
        Norm norm;
    };

    struct EncoderTrace;
    struct DecoderTrace;

    struct BatchStats {
        std::vector<Vec> mean, var;
    };

    std::vector<Vec> encode_batch(const std::vector<Mat>& inputs, NormMode mode, EncoderTrace* trace,
                                  BatchStats* stats) const;
    void encode_backward(EncoderTrace& trace, std::vector<Vec>& dcode);
    std::vector<Mat> decode_batch(const std::vector<Vec>& z, NormMode mode, DecoderTrace* trace, BatchStats* stats,
                                  std::vector<Mat>* features = nullptr) const;
    std::vector<Vec> decode_backward(DecoderTrace& trace, std::vector<Mat>& dlogits);

    void norm_forward(const Norm& norm, std::vector<Mat>& x, NormMode mode, ops::NormCache<Scalar>* cache,
                      BatchStats* stats) const;
    void norm_backward(Norm& norm, std::vector<Mat>& dy, const ops::NormCache<Scalar>& cache, NormMode mode);
    std::vector<Norm*> norms();

    ModelConfig config_;
    std::uint64_t seed_ = 1;
    std::vector<Block> encoder_;
    Conv head_;
    Parameter<Scalar> fc_weight_, fc_bias_;
    Norm fc_norm_;
    std::vector<Block> decoder_;
    Conv output_;
};

/// Training-precision model.
using Model = Vae<float>;

extern template class Vae<float>;
extern template class Vae<double>;

template <typename Scalar>
template <typename Other>
Vae<Other> Vae<Scalar>::cast() const {
    Vae<Other> out;
    out.config_ = config_;
    out.seed_ = seed_;
    out.gamma = gamma;
    auto cast_param = [](const Parameter<Scalar>& p) {
        return Parameter<Other>{p.name, p.value.template cast<Other>(), p.grad.template cast<Other>()};
    };
    auto cast_conv = [&](const Conv& c) {
        typename Vae<Other>::Conv o;
        o.weight = cast_param(c.weight);
        o.bias = cast_param(c.bias);
        o.kernel = c.kernel, o.stride = c.stride, o.up = c.up;
        return o;
    };
    auto cast_norm = [&](const Norm& n) {
        typename Vae<Other>::Norm o;
        o.gamma = cast_param(n.gamma), o.beta = cast_param(n.beta);
        o.mean = cast_param(n.mean), o.var = cast_param(n.var);
        return o;
    };
    for (const auto& b : encoder_) out.encoder_.push_back({cast_conv(b.conv), cast_norm(b.norm)});
    out.head_ = cast_conv(head_);
    out.fc_weight_ = cast_param(fc_weight_);
    out.fc_bias_ = cast_param(fc_bias_);
    out.fc_norm_ = cast_norm(fc_norm_);
    for (const auto& b : decoder_) out.decoder_.push_back({cast_conv(b.conv), cast_norm(b.norm)});
    out.output_ = cast_conv(output_);
    return out;
}

}  // namespace formfunc
