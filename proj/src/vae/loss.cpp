#include "formfunc/vae/loss.hpp"

#include <bit>

namespace formfunc {

void ModelConfig::validate() const {
    if (input_dim < 2 || !std::has_single_bit(unsigned(input_dim)))
        throw ShapeError("model input_dim must be a power of 2");
    if (latent_dim < 1) throw ShapeError("model latent_dim must be >= 1");
    if (channel_widths.empty()) throw ShapeError("model channel_widths must not be empty");
    for (int w : channel_widths)
        if (w < 1) throw ShapeError("model channel widths must be positive");
    if (base_edge() < 1) throw ShapeError("too many levels for input_dim");
}

void TrainConfig::validate() const {
    if (!(alpha >= 1)) throw Error("train config: alpha must be >= 1");
    if (!(gamma_init > 0 && gamma_init <= 1)) throw Error("train config: gamma_init must lie in (0, 1]");
    if (!(lambda_bits > 0)) throw Error("train config: lambda_bits must be > 0");
    if (!(gamma_rate >= 0 && gamma_rate < 1)) throw Error("train config: gamma_rate must lie in [0, 1)");
    if (!(learning_rate > 0)) throw Error("train config: learning_rate must be > 0");
    if (epochs < 0) throw Error("train config: epochs must be >= 0");
    if (batch_size < 1) throw Error("train config: batch_size must be >= 1");
}

void LatentCode::validate() const {
    if (means.size() != log_variances.size()) throw ShapeError("latent code: means/log_variances length mismatch");
    if (!means.allFinite() || !log_variances.allFinite()) throw ShapeError("latent code has non-finite entries");
}

std::string to_string(Optimizer optimizer) { return optimizer == Optimizer::adam ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& name) {
    if (name == "adam") return Optimizer::adam;
    if (name == "sgd") return Optimizer::sgd;
    throw Error("unknown optimizer '" + name + "'");
}

double recon_loss(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x_prob,
                  double alpha) {
    if (x.size() != x_prob.size()) throw ShapeError("recon_loss: shape mismatch");
    double total = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) total += weighted_bce_term(x[i], x_prob[i], alpha);
    return total;
}

double recon_loss(const VoxelGrid& x, const ProbabilityGrid& x_prob, double alpha) {
    if (x.dim != x_prob.dim) throw ShapeError("recon_loss: shape mismatch");
    return recon_loss(x.values.cast<double>(), x_prob.values.cast<double>(), alpha);
}

Eigen::VectorXd kl_components(const LatentCode& code) {
    code.validate();
    const auto& mu = code.means.array();
    const auto& lv = code.log_variances.array();
    return (-0.5 * (1.0 + lv - mu.square() - lv.exp())).matrix();
}

Eigen::VectorXd reparameterize(const LatentCode& code, const Eigen::Ref<const Eigen::VectorXd>& noise) {
    if (noise.size() != code.size() || code.log_variances.size() != code.size())
        throw ShapeError("reparameterize: length mismatch");
    return (code.means.array() + (0.5 * code.log_variances.array()).exp() * noise.array()).matrix();
}

SoftFreeBitsStep soft_free_bits_step(const Eigen::Ref<const Eigen::VectorXd>& kl,
                                     const Eigen::Ref<const Eigen::VectorXd>& gamma, double lambda_bits,
                                     double rate, double gamma_floor) {
    if (kl.size() != gamma.size()) throw ShapeError("soft_free_bits_step: length mismatch");
    SoftFreeBitsStep out;
    out.regularizer = gamma.dot(kl);
    out.gamma = gamma;
    for (Eigen::Index j = 0; j < kl.size(); ++j) {
        const double g = kl[j] < lambda_bits ? gamma[j] * (1.0 - rate) : gamma[j] * (1.0 + rate);
        out.gamma[j] = std::clamp(g, gamma_floor, 1.0);
    }
    return out;
}

}  // namespace formfunc
