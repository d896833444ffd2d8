#include "formfunc/vae/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "formfunc/vae/loss.hpp"

namespace formfunc {

namespace {

constexpr double kNormMomentum = 0.1;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

class Stepper {
public:
    Stepper(Model& model, const TrainConfig& config) : params_(model.parameters()), config_(config) {
        if (config.optimizer == Optimizer::adam) {
            for (auto* p : params_) {
                m_.push_back(ops::Mat<float>::Zero(p->value.rows(), p->value.cols()));
                v_.push_back(ops::Mat<float>::Zero(p->value.rows(), p->value.cols()));
            }
        }
    }

    void step() {
        const float lr = float(config_.learning_rate);
        if (config_.optimizer == Optimizer::sgd) {
            for (auto* p : params_) p->value -= lr * p->grad;
            return;
        }
        ++t_;
        const float c1 = float(1.0 - std::pow(kAdamBeta1, t_));
        const float c2 = float(1.0 - std::pow(kAdamBeta2, t_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = *params_[k];
            m_[k] = float(kAdamBeta1) * m_[k] + float(1 - kAdamBeta1) * p.grad;
            v_[k] = float(kAdamBeta2) * v_[k] + float(1 - kAdamBeta2) * p.grad.cwiseAbs2();
            p.value.array() -= lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + float(kAdamEps));
        }
    }

private:
    std::vector<Parameter<float>*> params_;
    const TrainConfig& config_;
    std::vector<ops::Mat<float>> m_, v_;
    int t_ = 0;
};

void check_data(const Model& model, std::span<const VoxelGrid> data) {
    if (data.empty()) throw Error("train: empty dataset");
    for (const auto& g : data)
        if (g.dim != model.config().input_dim)
            throw Error("train: grid dim " + std::to_string(g.dim) + " differs from model input_dim " +
                        std::to_string(model.config().input_dim));
}

}  // namespace

std::vector<double> TrainHistory::losses() const {
    std::vector<double> out;
    for (const auto& e : epochs) out.push_back(e.loss);
    return out;
}

TrainHistory train(Model& model, std::span<const VoxelGrid> data, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
    config.validate();
    check_data(model, data);
    const int J = model.latent_dim();
    if (model.gamma.size() != J) model.gamma = Eigen::VectorXd::Constant(J, config.gamma_init);
    model.gamma = model.gamma.cwiseMax(config.gamma_init).cwiseMin(1.0);

    std::mt19937_64 rng(config.rng_seed);
    std::normal_distribution<double> normal;
    Stepper optimizer(model, config);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    PassOptions pass;
    pass.norm = NormMode::batch;
    pass.gradients = true;
    pass.momentum = kNormMomentum;

    TrainHistory history;
    std::vector<VoxelGrid> batch;
    std::vector<Eigen::VectorXd> noise;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochStats stats;
        stats.epoch = epoch;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(config.batch_size));
            batch.clear();
            noise.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(data[order[i]]);
                Eigen::VectorXd n(J);
                for (int j = 0; j < J; ++j) n[j] = normal(rng);
                noise.push_back(std::move(n));
            }
            model.zero_grad();
            const LossBreakdown loss = model.evaluate(batch, noise, config.alpha, pass);
            if (!std::isfinite(loss.total)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << ", batch " << batches
                    << " (reconstruction " << loss.reconstruction << ", regularizer " << loss.regularizer
                    << "); try a smaller learning_rate";
                throw Error(msg.str());
            }
            optimizer.step();
            model.gamma = soft_free_bits_step(loss.kl_mean, model.gamma, config.lambda_bits, config.gamma_rate,
                                              config.gamma_init)
                              .gamma;
            stats.loss += loss.total;
            stats.reconstruction += loss.reconstruction;
            stats.predicted_occupancy += loss.predicted_occupancy;
            ++batches;
        }
        stats.loss /= batches;
        stats.reconstruction /= batches;
        stats.predicted_occupancy /= batches;
        stats.mean_gamma = model.gamma.mean();
        history.epochs.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    if (config.epochs > 0) recalibrate_norms(model, data, config.batch_size);
    return history;
}

void recalibrate_norms(Model& model, std::span<const VoxelGrid> data, int batch_size) {
    check_data(model, data);
    if (batch_size < 1) throw Error("recalibrate_norms: batch_size must be >= 1");
    NormAccumulator acc;
    PassOptions pass;
    pass.norm = NormMode::batch;
    pass.accumulate = &acc;
    const std::vector<Eigen::VectorXd> zeros(std::size_t(batch_size), Eigen::VectorXd::Zero(model.latent_dim()));
    for (std::size_t start = 0; start < data.size(); start += std::size_t(batch_size)) {
        const std::size_t n = std::min(data.size() - start, std::size_t(batch_size));
        model.evaluate(data.subspan(start, n), std::span(zeros).first(n), 1.0, pass);
    }
    model.load_norm_statistics(acc);
}

double mean_reconstruction_iou(const Model& model, std::span<const VoxelGrid> data, float threshold) {
    if (data.empty()) throw Error("mean_reconstruction_iou: empty dataset");
    double total = 0;
    for (const auto& g : data) {
        const LatentCode code = model.encode(g);
        total += iou(g, formfunc::threshold(model.decode(code.means), threshold));
    }
    return total / double(data.size());
}

}  // namespace formfunc
