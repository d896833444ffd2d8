#include "formfunc/vae/model.hpp"

#include <cmath>
#include <random>

#include "formfunc/vae/loss.hpp"

namespace formfunc {

namespace {

constexpr double kNormEpsilon = 1e-5;
// Output bias starts at the logit of a sparse occupancy prior.
constexpr double kInitialOccupancy = 0.05;

template <typename Scalar>
Parameter<Scalar> make_param(std::string name, Eigen::Index rows, Eigen::Index cols) {
    Parameter<Scalar> p;
    p.name = std::move(name);
    p.value = ops::Mat<Scalar>::Zero(rows, cols);
    p.grad = ops::Mat<Scalar>::Zero(rows, cols);
    return p;
}

template <typename Scalar>
void fill_normal(Parameter<Scalar>& p, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = Scalar(normal(rng));
}

template <typename Mat>
Mat relu(const Mat& m) {
    return m.cwiseMax(typename Mat::Scalar(0));
}

template <typename Mat>
void relu_backward(Mat& grad, const Mat& activation) {
    grad = (activation.array() > 0).select(grad, 0);
}

template <typename Mat>
Mat vstack(const Mat& top, const Mat& bottom) {
    Mat out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

}  // namespace

template <typename Scalar>
struct Vae<Scalar>::EncoderTrace {
    std::vector<std::vector<Mat>> inputs;       // [level][sample]
    std::vector<std::vector<Mat>> activations;  // post-ReLU, pre-norm
    std::vector<ops::NormCache<Scalar>> norms;
    std::vector<std::vector<std::vector<Eigen::Index>>> pool_argmax;
    std::vector<Mat> head_input;
    std::vector<std::vector<Eigen::Index>> head_argmax;
    NormMode mode = NormMode::batch;
};

template <typename Scalar>
struct Vae<Scalar>::DecoderTrace {
    std::vector<Vec> z;
    std::vector<Mat> fc_activations;            // post-ReLU, pre-norm
    ops::NormCache<Scalar> fc_norm;
    std::vector<std::vector<Mat>> inputs;       // [level][sample] volumes entering each upsampling conv
    std::vector<std::vector<Mat>> activations;  // [block][sample]
    std::vector<ops::NormCache<Scalar>> norms;
    NormMode mode = NormMode::batch;
};

template <typename Scalar>
Vae<Scalar>::Vae(const ModelConfig& config, std::uint64_t seed, double gamma_init)
    : config_(config), seed_(seed) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const int L = config_.levels();
    const int J = config_.latent_dim;
    gamma = Eigen::VectorXd::Constant(J, gamma_init);

    auto make_norm = [](const std::string& prefix, int channels) {
        Norm n;
        n.gamma = make_param<Scalar>(prefix + ".gamma", channels, 1);
        n.gamma.value.setOnes();
        n.beta = make_param<Scalar>(prefix + ".beta", channels, 1);
        n.mean = make_param<Scalar>(prefix + ".running_mean", channels, 1);
        n.var = make_param<Scalar>(prefix + ".running_var", channels, 1);
        n.var.value.setOnes();
        return n;
    };

    int channels = 1;
    for (int l = 0; l < L; ++l) {
        const std::string prefix = "encoder." + std::to_string(l);
        const int width = config_.channel_widths[std::size_t(l)];
        Block b;
        b.conv.weight = make_param<Scalar>(prefix + ".conv.weight", width, 27 * channels);
        fill_normal(b.conv.weight, std::sqrt(2.0 / (27.0 * channels)), rng);
        b.conv.bias = make_param<Scalar>(prefix + ".conv.bias", width, 1);
        b.conv.stride = 2;
        b.norm = make_norm(prefix + ".norm", width);
        encoder_.push_back(std::move(b));
        channels = width + (config_.stack_dense ? channels : 0);
    }

    head_.kernel = 1;
    head_.weight = make_param<Scalar>("encoder.head.weight", 2 * J, channels);
    fill_normal(head_.weight, std::sqrt(1.0 / channels), rng);
    // The reduce-max over positions biases every head output upwards; at full
    // scale the log-variance rows would start far above zero (e^30 and more on
    // some seeds) and swamp the first epochs with the KL term.
    head_.weight.value.bottomRows(J) *= Scalar(0.01);
    head_.bias = make_param<Scalar>("encoder.head.bias", 2 * J, 1);

    const int base_channels = config_.channel_widths.back();
    const Eigen::Index base_positions = ops::cube(config_.base_edge());
    fc_weight_ = make_param<Scalar>("decoder.fc.weight", base_channels * base_positions, J);
    fill_normal(fc_weight_, std::sqrt(2.0 / J), rng);
    fc_bias_ = make_param<Scalar>("decoder.fc.bias", base_channels * base_positions, 1);
    fc_norm_ = make_norm("decoder.fc.norm", base_channels);

    channels = base_channels;
    for (int i = 0; i + 1 < L; ++i) {
        const std::string prefix = "decoder." + std::to_string(i);
        const int width = config_.channel_widths[std::size_t(L - 2 - i)];
        Block b;
        b.conv.weight = make_param<Scalar>(prefix + ".conv.weight", width, 27 * channels);
        fill_normal(b.conv.weight, std::sqrt(2.0 / (27.0 * channels)), rng);
        b.conv.bias = make_param<Scalar>(prefix + ".conv.bias", width, 1);
        b.conv.up = 2;
        b.norm = make_norm(prefix + ".norm", width);
        decoder_.push_back(std::move(b));
        channels = width + (config_.stack_dense ? int(ops::depth_to_space_channels(channels)) : 0);
    }

    output_.up = 2;
    output_.weight = make_param<Scalar>("decoder.output.weight", 1, 27 * channels);
    fill_normal(output_.weight, std::sqrt(1.0 / (27.0 * channels)), rng);
    output_.bias = make_param<Scalar>("decoder.output.bias", 1, 1);
    output_.bias.value.setConstant(Scalar(std::log(kInitialOccupancy / (1 - kInitialOccupancy))));
}

template <typename Scalar>
void Vae<Scalar>::norm_forward(const Norm& norm, std::vector<Mat>& x, NormMode mode, ops::NormCache<Scalar>* cache,
                               BatchStats* stats) const {
    Vec batch_mean, batch_var;
    ops::batch_norm_forward<Scalar>(x, norm.gamma.value.col(0), norm.beta.value.col(0), mode == NormMode::batch,
                                    norm.mean.value.col(0), norm.var.value.col(0), Scalar(kNormEpsilon), cache,
                                    &batch_mean, &batch_var);
    if (stats && mode == NormMode::batch) {
        stats->mean.push_back(batch_mean);
        stats->var.push_back(batch_var);
    }
}

template <typename Scalar>
void Vae<Scalar>::norm_backward(Norm& norm, std::vector<Mat>& dy, const ops::NormCache<Scalar>& cache,
                                NormMode mode) {
    Vec dgamma = Vec::Zero(norm.gamma.value.rows()), dbeta = Vec::Zero(norm.beta.value.rows());
    if (mode == NormMode::batch)
        ops::batch_norm_backward<Scalar>(dy, cache, norm.gamma.value.col(0), dgamma, dbeta);
    else
        ops::batch_norm_backward_fixed<Scalar>(dy, cache, norm.gamma.value.col(0), dgamma, dbeta);
    norm.gamma.grad += dgamma;
    norm.beta.grad += dbeta;
}

template <typename Scalar>
std::vector<typename Vae<Scalar>::Vec> Vae<Scalar>::encode_batch(const std::vector<Mat>& inputs, NormMode mode,
                                                                 EncoderTrace* trace, BatchStats* stats) const {
    const std::size_t B = inputs.size();
    const int L = config_.levels();
    if (trace) {
        trace->mode = mode;
        trace->inputs.assign(std::size_t(L), {});
        trace->activations.assign(std::size_t(L), {});
        trace->norms.assign(std::size_t(L), {});
        trace->pool_argmax.assign(std::size_t(L), std::vector<std::vector<Eigen::Index>>(B));
        trace->head_argmax.assign(B, {});
    }

    std::vector<Mat> x = inputs;
    int edge = config_.input_dim;
    Mat cols, pooled;
    for (int l = 0; l < L; ++l) {
        const Block& block = encoder_[std::size_t(l)];
        std::vector<Mat> y(B);
        for (std::size_t b = 0; b < B; ++b) {
            ops::im2col<Scalar>(x[b], edge, 1, 2, cols);
            y[b].noalias() = block.conv.weight.value * cols;
            y[b].colwise() += block.conv.bias.value.col(0);
            y[b] = relu(y[b]);
        }
        if (trace) {
            trace->inputs[std::size_t(l)] = x;
            trace->activations[std::size_t(l)] = y;
        }
        norm_forward(block.norm, y, mode, trace ? &trace->norms[std::size_t(l)] : nullptr, stats);
        if (config_.stack_dense) {
            for (std::size_t b = 0; b < B; ++b) {
                std::vector<Eigen::Index> argmax;
                ops::maxpool2<Scalar>(x[b], edge, pooled, argmax);
                y[b] = vstack(y[b], pooled);
                if (trace) trace->pool_argmax[std::size_t(l)][b] = std::move(argmax);
            }
        }
        x = std::move(y);
        edge /= 2;
    }

    std::vector<Vec> codes(B);
    for (std::size_t b = 0; b < B; ++b) {
        Mat g = head_.weight.value * x[b];
        g.colwise() += head_.bias.value.col(0);
        codes[b].resize(g.rows());
        std::vector<Eigen::Index> argmax(std::size_t(g.rows()));
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            Eigen::Index where = 0;
            codes[b][r] = g.row(r).maxCoeff(&where);
            argmax[std::size_t(r)] = where;
        }
        if (trace) trace->head_argmax[b] = std::move(argmax);
    }
    if (trace) trace->head_input = std::move(x);
    return codes;
}

template <typename Scalar>
void Vae<Scalar>::encode_backward(EncoderTrace& trace, std::vector<Vec>& dcode) {
    const std::size_t B = dcode.size();
    const int L = config_.levels();

    std::vector<Mat> dx(B);
    for (std::size_t b = 0; b < B; ++b) {
        const Mat& xin = trace.head_input[b];
        dx[b] = Mat::Zero(xin.rows(), xin.cols());
        for (Eigen::Index r = 0; r < dcode[b].size(); ++r) {
            const Scalar g = dcode[b][r];
            const Eigen::Index where = trace.head_argmax[b][std::size_t(r)];
            head_.weight.grad.row(r) += g * xin.col(where).transpose();
            head_.bias.grad(r, 0) += g;
            dx[b].col(where) += g * head_.weight.value.row(r).transpose();
        }
    }

    Mat cols, dcols;
    for (int l = L - 1; l >= 0; --l) {
        Block& block = encoder_[std::size_t(l)];
        const int edge = config_.input_dim >> l;
        const Eigen::Index width = block.conv.weight.value.rows();
        const auto& inputs = trace.inputs[std::size_t(l)];
        const bool need_input_grad = l > 0;

        std::vector<Mat> dy(B), dprev(B);
        for (std::size_t b = 0; b < B; ++b) {
            dy[b] = dx[b].topRows(width);
            if (need_input_grad) dprev[b] = Mat::Zero(inputs[b].rows(), inputs[b].cols());
            if (need_input_grad && config_.stack_dense)
                ops::maxpool2_backward_add<Scalar>(dx[b].bottomRows(dx[b].rows() - width),
                                                   trace.pool_argmax[std::size_t(l)][b], dprev[b]);
        }
        norm_backward(block.norm, dy, trace.norms[std::size_t(l)], trace.mode);
        for (std::size_t b = 0; b < B; ++b) {
            relu_backward(dy[b], trace.activations[std::size_t(l)][b]);
            ops::im2col<Scalar>(inputs[b], edge, 1, 2, cols);
            block.conv.weight.grad.noalias() += dy[b] * cols.transpose();
            block.conv.bias.grad += dy[b].rowwise().sum();
            if (need_input_grad) {
                dcols.noalias() = block.conv.weight.value.transpose() * dy[b];
                ops::col2im_add<Scalar>(dcols, edge, 1, 2, dprev[b]);
            }
        }
        dx = std::move(dprev);
    }
}

template <typename Scalar>
std::vector<typename Vae<Scalar>::Mat> Vae<Scalar>::decode_batch(const std::vector<Vec>& z, NormMode mode,
                                                                 DecoderTrace* trace, BatchStats* stats,
                                                                 std::vector<Mat>* features) const {
    const std::size_t B = z.size();
    const int L = config_.levels();
    const Eigen::Index base_channels = config_.channel_widths.back();
    const Eigen::Index base_positions = ops::cube(config_.base_edge());
    if (trace) {
        trace->mode = mode;
        trace->z = z;
        trace->inputs.assign(std::size_t(L), {});
        trace->activations.assign(std::size_t(L - 1), {});
        trace->norms.assign(std::size_t(L - 1), {});
    }

    std::vector<Mat> y(B);
    for (std::size_t b = 0; b < B; ++b) {
        Vec f = fc_weight_.value * z[b] + fc_bias_.value.col(0);
        y[b] = relu(Mat(Eigen::Map<const Mat>(f.data(), base_channels, base_positions)));
    }
    if (trace) trace->fc_activations = y;
    norm_forward(fc_norm_, y, mode, trace ? &trace->fc_norm : nullptr, stats);

    int edge = config_.base_edge();
    Mat shuffled;
    for (int i = 0; i + 1 < L; ++i) {
        const Block& block = decoder_[std::size_t(i)];
        std::vector<Mat> h(B);
        for (std::size_t b = 0; b < B; ++b) {
            ops::upconv_forward<Scalar>(y[b], edge, block.conv.weight.value, block.conv.bias.value.col(0), h[b]);
            h[b] = relu(h[b]);
        }
        if (trace) {
            trace->inputs[std::size_t(i)] = y;
            trace->activations[std::size_t(i)] = h;
        }
        norm_forward(block.norm, h, mode, trace ? &trace->norms[std::size_t(i)] : nullptr, stats);
        if (config_.stack_dense) {
            for (std::size_t b = 0; b < B; ++b) {
                ops::depth_to_space<Scalar>(y[b], edge, shuffled);
                h[b] = vstack(h[b], shuffled);
            }
        }
        y = std::move(h);
        edge *= 2;
    }

    if (features) *features = y;
    std::vector<Mat> logits(B);
    for (std::size_t b = 0; b < B; ++b) {
        ops::upconv_forward<Scalar>(y[b], edge, output_.weight.value, output_.bias.value.col(0), logits[b]);
    }
    if (trace) trace->inputs[std::size_t(L - 1)] = std::move(y);
    return logits;
}

template <typename Scalar>
std::vector<typename Vae<Scalar>::Vec> Vae<Scalar>::decode_backward(DecoderTrace& trace,
                                                                    std::vector<Mat>& dlogits) {
    const std::size_t B = dlogits.size();
    const int L = config_.levels();
    Vec dbias;

    int edge = config_.input_dim / 2;
    std::vector<Mat> dy(B);
    for (std::size_t b = 0; b < B; ++b) {
        const Mat& y = trace.inputs[std::size_t(L - 1)][b];
        dy[b] = Mat::Zero(y.rows(), y.cols());
        dbias = Vec::Zero(1);
        ops::upconv_backward<Scalar>(y, edge, output_.weight.value, dlogits[b], output_.weight.grad, dbias, &dy[b]);
        output_.bias.grad += dbias;
    }

    for (int i = L - 2; i >= 0; --i) {
        Block& block = decoder_[std::size_t(i)];
        edge /= 2;
        const auto& inputs = trace.inputs[std::size_t(i)];
        const Eigen::Index width = block.conv.weight.value.rows();
        std::vector<Mat> dh(B), dprev(B);
        for (std::size_t b = 0; b < B; ++b) {
            dh[b] = dy[b].topRows(width);
            dprev[b] = Mat::Zero(inputs[b].rows(), inputs[b].cols());
            if (config_.stack_dense)
                ops::depth_to_space_backward_add<Scalar>(dy[b].bottomRows(dy[b].rows() - width), edge, dprev[b]);
        }
        norm_backward(block.norm, dh, trace.norms[std::size_t(i)], trace.mode);
        for (std::size_t b = 0; b < B; ++b) {
            relu_backward(dh[b], trace.activations[std::size_t(i)][b]);
            dbias = Vec::Zero(width);
            ops::upconv_backward<Scalar>(inputs[b], edge, block.conv.weight.value, dh[b], block.conv.weight.grad,
                                         dbias, &dprev[b]);
            block.conv.bias.grad += dbias;
        }
        dy = std::move(dprev);
    }

    norm_backward(fc_norm_, dy, trace.fc_norm, trace.mode);
    std::vector<Vec> dz(B);
    for (std::size_t b = 0; b < B; ++b) {
        relu_backward(dy[b], trace.fc_activations[b]);
        const Eigen::Map<const Vec> df(dy[b].data(), dy[b].size());
        fc_weight_.grad.noalias() += df * trace.z[b].transpose();
        fc_bias_.grad += df;
        dz[b].noalias() = fc_weight_.value.transpose() * df;
    }
    return dz;
}

template <typename Scalar>
LossBreakdown Vae<Scalar>::evaluate(std::span<const VoxelGrid> batch, std::span<const Eigen::VectorXd> noise,
                                    double alpha, const PassOptions& options) {
    const std::size_t B = batch.size();
    const int J = config_.latent_dim;
    if (B == 0) throw ShapeError("evaluate: empty batch");
    if (noise.size() != B) throw ShapeError("evaluate: one noise vector per sample required");
    if (gamma.size() != J) throw ShapeError("evaluate: gamma length differs from latent_dim");

    std::vector<Mat> inputs(B);
    for (std::size_t b = 0; b < B; ++b) {
        if (batch[b].dim != config_.input_dim) throw ShapeError("evaluate: grid dim differs from model input_dim");
        if (noise[b].size() != J) throw ShapeError("evaluate: noise length differs from latent_dim");
        inputs[b] = batch[b].values.template cast<Scalar>().transpose();
    }

    EncoderTrace etrace;
    DecoderTrace dtrace;
    BatchStats stats;
    const bool grads = options.gradients;
    const std::vector<Vec> codes = encode_batch(inputs, options.norm, grads ? &etrace : nullptr, &stats);

    std::vector<Vec> z(B);
    for (std::size_t b = 0; b < B; ++b) {
        const auto mu = codes[b].head(J).array();
        const auto lv = codes[b].tail(J).array();
        z[b] = (mu + (lv * Scalar(0.5)).exp() * noise[b].template cast<Scalar>().array()).matrix();
    }
    const std::vector<Mat> logits = decode_batch(z, options.norm, grads ? &dtrace : nullptr, &stats);

    LossBreakdown out;
    out.kl_mean = Eigen::VectorXd::Zero(J);
    const Scalar a = Scalar(alpha);
    const Scalar eps = Scalar(kProbabilityEpsilon);
    const Scalar inv_b = Scalar(1.0 / double(B));
    std::vector<Mat> dlogits(B);
    std::int64_t predicted = 0;
    for (std::size_t b = 0; b < B; ++b) {
        const Mat& l = logits[b];
        if (grads) dlogits[b].resize(1, l.cols());
        double recon = 0;
        for (Eigen::Index v = 0; v < l.cols(); ++v) {
            const Scalar p = ops::sigmoid(l(0, v));
            const Scalar x = inputs[b](0, v);
            recon += double(weighted_bce_term(x, p, a));
            predicted += p >= Scalar(0.5);
            if (grads) {
                const bool clipped = p < eps || p > Scalar(1) - eps;
                dlogits[b](0, v) = clipped ? Scalar(0) : inv_b * ((Scalar(1) - x) * p - a * x * (Scalar(1) - p));
            }
        }
        const Eigen::VectorXd mu = codes[b].head(J).template cast<double>();
        const Eigen::VectorXd lv = codes[b].tail(J).template cast<double>();
        const Eigen::VectorXd kl = (-0.5 * (1.0 + lv.array() - mu.array().square() - lv.array().exp())).matrix();
        out.reconstruction += recon;
        out.regularizer += gamma.dot(kl);
        out.kl_mean += kl;
    }
    out.reconstruction /= double(B);
    out.regularizer /= double(B);
    out.kl_mean /= double(B);
    out.total = out.reconstruction + out.regularizer;
    out.predicted_occupancy = double(predicted) / double(B * std::size_t(logits[0].cols()));

    if (grads) {
        std::vector<Vec> dz = decode_backward(dtrace, dlogits);
        std::vector<Vec> dcode(B);
        const Vec g = gamma.template cast<Scalar>();
        for (std::size_t b = 0; b < B; ++b) {
            const auto mu = codes[b].head(J).array();
            const auto lv = codes[b].tail(J).array();
            const auto n = noise[b].template cast<Scalar>().array();
            dcode[b].resize(2 * J);
            dcode[b].head(J) = (g.array() * mu * inv_b + dz[b].array()).matrix();
            dcode[b].tail(J) = (g.array() * Scalar(0.5) * (lv.exp() - Scalar(1)) * inv_b +
                                dz[b].array() * Scalar(0.5) * (lv * Scalar(0.5)).exp() * n)
                                   .matrix();
        }
        encode_backward(etrace, dcode);
    }

    if (options.norm == NormMode::batch) {
        const auto layers = norms();
        if (options.momentum > 0) {
            const Scalar m = Scalar(options.momentum);
            for (std::size_t k = 0; k < layers.size(); ++k) {
                layers[k]->mean.value.col(0) = (Scalar(1) - m) * layers[k]->mean.value.col(0) + m * stats.mean[k];
                layers[k]->var.value.col(0) = (Scalar(1) - m) * layers[k]->var.value.col(0) + m * stats.var[k];
            }
        }
        if (options.accumulate) {
            auto& acc = *options.accumulate;
            if (acc.mean_sum.empty()) {
                for (std::size_t k = 0; k < layers.size(); ++k) {
                    acc.mean_sum.push_back(Eigen::VectorXd::Zero(stats.mean[k].size()));
                    acc.var_sum.push_back(Eigen::VectorXd::Zero(stats.var[k].size()));
                }
            }
            for (std::size_t k = 0; k < layers.size(); ++k) {
                acc.mean_sum[k] += stats.mean[k].template cast<double>();
                acc.var_sum[k] += stats.var[k].template cast<double>();
            }
            ++acc.batches;
        }
    }
    return out;
}

template <typename Scalar>
LatentCode Vae<Scalar>::encode(const VoxelGrid& grid) const {
    validate(grid);
    if (grid.dim != config_.input_dim) throw ShapeError("encode: grid dim differs from model input_dim");
    const std::vector<Mat> inputs{grid.values.template cast<Scalar>().transpose()};
    const Vec code = encode_batch(inputs, NormMode::running, nullptr, nullptr).front();
    const int J = config_.latent_dim;
    return LatentCode(code.head(J).template cast<double>(), code.tail(J).template cast<double>());
}

template <typename Scalar>
ProbabilityGrid Vae<Scalar>::decode(const Eigen::VectorXd& z) const {
    if (z.size() != config_.latent_dim) throw ShapeError("decode: latent length differs from latent_dim");
    const std::vector<Vec> zs{z.template cast<Scalar>()};
    const Mat logits = decode_batch(zs, NormMode::running, nullptr, nullptr).front();
    ProbabilityGrid out(config_.input_dim);
    for (Eigen::Index v = 0; v < logits.cols(); ++v) out.values[v] = float(ops::sigmoid(double(logits(0, v))));
    return out;
}

template <typename Scalar>
Eigen::VectorXd Vae<Scalar>::decoder_features(const Eigen::VectorXd& z) const {
    if (z.size() != config_.latent_dim) throw ShapeError("decoder_features: latent length differs from latent_dim");
    const std::vector<Vec> zs{z.template cast<Scalar>()};
    std::vector<Mat> features;
    decode_batch(zs, NormMode::running, nullptr, nullptr, &features);
    const Mat& f = features.front();
    return Eigen::Map<const Vec>(f.data(), f.size()).template cast<double>();
}

template <typename Scalar>
std::vector<typename Vae<Scalar>::Norm*> Vae<Scalar>::norms() {
    std::vector<Norm*> out;
    for (auto& b : encoder_) out.push_back(&b.norm);
    out.push_back(&fc_norm_);
    for (auto& b : decoder_) out.push_back(&b.norm);
    return out;
}

template <typename Scalar>
std::vector<Parameter<Scalar>*> Vae<Scalar>::parameters() {
    std::vector<Parameter<Scalar>*> out;
    auto block = [&](Block& b) {
        out.insert(out.end(), {&b.conv.weight, &b.conv.bias, &b.norm.gamma, &b.norm.beta});
    };
    for (auto& b : encoder_) block(b);
    out.insert(out.end(), {&head_.weight, &head_.bias, &fc_weight_, &fc_bias_, &fc_norm_.gamma, &fc_norm_.beta});
    for (auto& b : decoder_) block(b);
    out.insert(out.end(), {&output_.weight, &output_.bias});
    return out;
}

template <typename Scalar>
std::vector<const Parameter<Scalar>*> Vae<Scalar>::parameters() const {
    auto mutable_params = const_cast<Vae*>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
}

template <typename Scalar>
std::vector<Parameter<Scalar>*> Vae<Scalar>::buffers() {
    std::vector<Parameter<Scalar>*> out;
    for (Norm* n : norms()) out.insert(out.end(), {&n->mean, &n->var});
    return out;
}

template <typename Scalar>
std::vector<const Parameter<Scalar>*> Vae<Scalar>::buffers() const {
    auto mutable_buffers = const_cast<Vae*>(this)->buffers();
    return {mutable_buffers.begin(), mutable_buffers.end()};
}

template <typename Scalar>
Eigen::Index Vae<Scalar>::parameter_count() const {
    Eigen::Index n = 0;
    for (const auto* p : parameters()) n += p->value.size();
    return n;
}

template <typename Scalar>
void Vae<Scalar>::zero_grad() {
    for (auto* p : parameters()) p->grad.setZero();
}

template <typename Scalar>
void Vae<Scalar>::load_norm_statistics(const NormAccumulator& acc) {
    if (acc.batches == 0) return;
    const auto layers = norms();
    if (acc.mean_sum.size() != layers.size()) throw ShapeError("load_norm_statistics: layer count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k]->mean.value.col(0) = (acc.mean_sum[k] / acc.batches).template cast<Scalar>();
        layers[k]->var.value.col(0) = (acc.var_sum[k] / acc.batches).template cast<Scalar>();
    }
}

template class Vae<float>;
template class Vae<double>;

}  // namespace formfunc
