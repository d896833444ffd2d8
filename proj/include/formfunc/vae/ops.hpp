#pragma once

// Dense feature-volume kernels used by the autoencoder. A feature volume is
// a (channels x edge^3) matrix whose columns are voxel positions in the same
// x-fastest, z, y order as Grid. All kernels are templated on the scalar so
// the same code runs in float for training and double for gradient checks.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace formfunc::ops {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline Eigen::Index cube(int edge) { return Eigen::Index(edge) * edge * edge; }

/// Output edge of a 3x3x3 convolution with one voxel of zero padding.
inline int conv_out_edge(int edge, int stride) { return (edge - 1) / stride + 1; }

/// Unfolds 3x3x3 neighbourhoods into columns (27*C rows, one column per
/// output position). The input is read as if nearest-upsampled by `up`
/// first, so an upsample followed by a convolution never materializes the
/// enlarged volume.
template <typename Scalar>
void im2col(const Mat<Scalar>& in, int edge, int up, int stride, Mat<Scalar>& cols) {
    const Eigen::Index C = in.rows();
    const int E = edge * up;
    const int o = conv_out_edge(E, stride);
    cols.resize(27 * C, cube(o));
    for (int oc = 0; oc < o; ++oc)
        for (int ob = 0; ob < o; ++ob)
            for (int oa = 0; oa < o; ++oa) {
                const Eigen::Index q = oa + Eigen::Index(o) * (ob + Eigen::Index(o) * oc);
                auto col = cols.col(q);
                for (int kc = 0; kc < 3; ++kc) {
                    const int ic = oc * stride - 1 + kc;
                    for (int kb = 0; kb < 3; ++kb) {
                        const int ib = ob * stride - 1 + kb;
                        for (int ka = 0; ka < 3; ++ka) {
                            const int ia = oa * stride - 1 + ka;
                            const Eigen::Index k = ka + 3 * (kb + 3 * kc);
                            if (ia < 0 || ib < 0 || ic < 0 || ia >= E || ib >= E || ic >= E) {
                                col.segment(k * C, C).setZero();
                            } else {
                                const Eigen::Index p =
                                    ia / up + Eigen::Index(edge) * (ib / up + Eigen::Index(edge) * (ic / up));
                                col.segment(k * C, C) = in.col(p);
                            }
                        }
                    }
                }
            }
}

/// Adjoint of im2col: scatters column gradients back onto the (low
/// resolution) input volume.
template <typename Scalar>
void col2im_add(const Mat<Scalar>& cols, int edge, int up, int stride, Mat<Scalar>& din) {
    const Eigen::Index C = din.rows();
    const int E = edge * up;
    const int o = conv_out_edge(E, stride);
    for (int oc = 0; oc < o; ++oc)
        for (int ob = 0; ob < o; ++ob)
            for (int oa = 0; oa < o; ++oa) {
                const Eigen::Index q = oa + Eigen::Index(o) * (ob + Eigen::Index(o) * oc);
                const auto col = cols.col(q);
                for (int kc = 0; kc < 3; ++kc) {
                    const int ic = oc * stride - 1 + kc;
                    if (ic < 0 || ic >= E) continue;
                    for (int kb = 0; kb < 3; ++kb) {
                        const int ib = ob * stride - 1 + kb;
                        if (ib < 0 || ib >= E) continue;
                        for (int ka = 0; ka < 3; ++ka) {
                            const int ia = oa * stride - 1 + ka;
                            if (ia < 0 || ia >= E) continue;
                            const Eigen::Index k = ka + 3 * (kb + 3 * kc);
                            const Eigen::Index p =
                                ia / up + Eigen::Index(edge) * (ib / up + Eigen::Index(edge) * (ic / up));
                            din.col(p) += col.segment(k * C, C);
                        }
                    }
                }
            }
}

// Nearest 2x upsampling followed by a 3x3x3 convolution (pad 1) only ever
// reads a 2x2x2 coarse neighbourhood per output voxel. Splitting the output
// by parity p = (pa, pb, pc) in {0,1}^3, kernel tap k along an axis lands on
// coarse offset floor((p + k - 1) / 2), so each parity is an ordinary 2x2x2
// convolution on the coarse grid with folded weights.

inline int folded_tap(int k, int p) { return (p + k + 1) / 2 - p; }

/// Folds a (Cout x 27C) upsampling kernel into the (Cout x 8C) kernel of one
/// output parity (0..7, bit 0 = x, bit 1 = z, bit 2 = y axis of storage).
template <typename Scalar>
Mat<Scalar> fold_kernel(const Mat<Scalar>& w, Eigen::Index C, int parity) {
    const int pa = parity & 1, pb = (parity >> 1) & 1, pc = parity >> 2;
    Mat<Scalar> out = Mat<Scalar>::Zero(w.rows(), 8 * C);
    for (int kc = 0; kc < 3; ++kc)
        for (int kb = 0; kb < 3; ++kb)
            for (int ka = 0; ka < 3; ++ka) {
                const Eigen::Index k = ka + 3 * (kb + 3 * kc);
                const Eigen::Index t = folded_tap(ka, pa) + 2 * (folded_tap(kb, pb) + 2 * folded_tap(kc, pc));
                out.middleCols(t * C, C) += w.middleCols(k * C, C);
            }
    return out;
}

/// Adjoint of fold_kernel.
template <typename Scalar>
void unfold_kernel_add(const Mat<Scalar>& wp, Eigen::Index C, int parity, Mat<Scalar>& dw) {
    const int pa = parity & 1, pb = (parity >> 1) & 1, pc = parity >> 2;
    for (int kc = 0; kc < 3; ++kc)
        for (int kb = 0; kb < 3; ++kb)
            for (int ka = 0; ka < 3; ++ka) {
                const Eigen::Index k = ka + 3 * (kb + 3 * kc);
                const Eigen::Index t = folded_tap(ka, pa) + 2 * (folded_tap(kb, pb) + 2 * folded_tap(kc, pc));
                dw.middleCols(k * C, C) += wp.middleCols(t * C, C);
            }
}

/// 2x2x2 neighbourhoods of the coarse volume for one output parity: tap t
/// along an axis reads coarse index a + p - 1 + t.
template <typename Scalar>
void im2col_parity(const Mat<Scalar>& in, int edge, int parity, Mat<Scalar>& cols) {
    const Eigen::Index C = in.rows();
    const int pa = parity & 1, pb = (parity >> 1) & 1, pc = parity >> 2;
    cols.resize(8 * C, cube(edge));
    for (int c = 0; c < edge; ++c)
        for (int b = 0; b < edge; ++b)
            for (int a = 0; a < edge; ++a) {
                auto col = cols.col(a + Eigen::Index(edge) * (b + Eigen::Index(edge) * c));
                for (int t = 0; t < 8; ++t) {
                    const int ia = a + pa - 1 + (t & 1), ib = b + pb - 1 + ((t >> 1) & 1),
                              ic = c + pc - 1 + (t >> 2);
                    if (ia < 0 || ib < 0 || ic < 0 || ia >= edge || ib >= edge || ic >= edge)
                        col.segment(t * C, C).setZero();
                    else
                        col.segment(t * C, C) = in.col(ia + Eigen::Index(edge) * (ib + Eigen::Index(edge) * ic));
                }
            }
}

template <typename Scalar>
void col2im_parity_add(const Mat<Scalar>& cols, int edge, int parity, Mat<Scalar>& din) {
    const Eigen::Index C = din.rows();
    const int pa = parity & 1, pb = (parity >> 1) & 1, pc = parity >> 2;
    for (int c = 0; c < edge; ++c)
        for (int b = 0; b < edge; ++b)
            for (int a = 0; a < edge; ++a) {
                const auto col = cols.col(a + Eigen::Index(edge) * (b + Eigen::Index(edge) * c));
                for (int t = 0; t < 8; ++t) {
                    const int ia = a + pa - 1 + (t & 1), ib = b + pb - 1 + ((t >> 1) & 1),
                              ic = c + pc - 1 + (t >> 2);
                    if (ia < 0 || ib < 0 || ic < 0 || ia >= edge || ib >= edge || ic >= edge) continue;
                    din.col(ia + Eigen::Index(edge) * (ib + Eigen::Index(edge) * ic)) += col.segment(t * C, C);
                }
            }
}

/// Copies the coarse-indexed rows of one parity into (or out of) the fine
/// volume of edge 2 * edge.
template <typename Scalar>
void scatter_parity(const Mat<Scalar>& part, int edge, int parity, Mat<Scalar>& fine) {
    const int pa = parity & 1, pb = (parity >> 1) & 1, pc = parity >> 2;
    const Eigen::Index E = 2 * edge;
    for (int c = 0; c < edge; ++c)
        for (int b = 0; b < edge; ++b)
            for (int a = 0; a < edge; ++a)
                fine.col((2 * a + pa) + E * ((2 * b + pb) + E * (2 * c + pc))) =
                    part.col(a + Eigen::Index(edge) * (b + Eigen::Index(edge) * c));
}

template <typename Scalar>
void gather_parity(const Mat<Scalar>& fine, int edge, int parity, Mat<Scalar>& part) {
    const int pa = parity & 1, pb = (parity >> 1) & 1, pc = parity >> 2;
    const Eigen::Index E = 2 * edge;
    part.resize(fine.rows(), cube(edge));
    for (int c = 0; c < edge; ++c)
        for (int b = 0; b < edge; ++b)
            for (int a = 0; a < edge; ++a)
                part.col(a + Eigen::Index(edge) * (b + Eigen::Index(edge) * c)) =
                    fine.col((2 * a + pa) + E * ((2 * b + pb) + E * (2 * c + pc)));
}

/// out = conv3(upsample2(in)) + bias, out is (Cout x (2 edge)^3).
template <typename Scalar>
void upconv_forward(const Mat<Scalar>& in, int edge, const Mat<Scalar>& w, const Vec<Scalar>& bias, Mat<Scalar>& out) {
    const Eigen::Index C = in.rows();
    out.resize(w.rows(), cube(2 * edge));
    Mat<Scalar> cols, part;
    for (int parity = 0; parity < 8; ++parity) {
        im2col_parity(in, edge, parity, cols);
        part.noalias() = fold_kernel(w, C, parity) * cols;
        part.colwise() += bias;
        scatter_parity(part, edge, parity, out);
    }
}

/// Accumulates weight and bias gradients of upconv_forward; when `din` is
/// non-null also accumulates the input gradient.
template <typename Scalar>
void upconv_backward(const Mat<Scalar>& in, int edge, const Mat<Scalar>& w, const Mat<Scalar>& dout, Mat<Scalar>& dw,
                     Vec<Scalar>& dbias, Mat<Scalar>* din) {
    const Eigen::Index C = in.rows();
    Mat<Scalar> cols, part, dwp, dcols;
    for (int parity = 0; parity < 8; ++parity) {
        im2col_parity(in, edge, parity, cols);
        gather_parity(dout, edge, parity, part);
        dwp.noalias() = part * cols.transpose();
        unfold_kernel_add(dwp, C, parity, dw);
        dbias += part.rowwise().sum();
        if (din) {
            dcols.noalias() = fold_kernel(w, C, parity).transpose() * part;
            col2im_parity_add(dcols, edge, parity, *din);
        }
    }
}

/// 2x2x2 max pooling with stride 2. `argmax` records the winning input
/// position for every output element.
template <typename Scalar>
void maxpool2(const Mat<Scalar>& in, int edge, Mat<Scalar>& out, std::vector<Eigen::Index>& argmax) {
    const Eigen::Index C = in.rows();
    const int o = edge / 2;
    out.resize(C, cube(o));
    argmax.assign(std::size_t(C * cube(o)), 0);
    for (int oc = 0; oc < o; ++oc)
        for (int ob = 0; ob < o; ++ob)
            for (int oa = 0; oa < o; ++oa) {
                const Eigen::Index q = oa + Eigen::Index(o) * (ob + Eigen::Index(o) * oc);
                for (Eigen::Index ch = 0; ch < C; ++ch) {
                    Scalar best = -std::numeric_limits<Scalar>::infinity();
                    Eigen::Index where = 0;
                    for (int d = 0; d < 8; ++d) {
                        const int ia = 2 * oa + (d & 1), ib = 2 * ob + ((d >> 1) & 1), ic = 2 * oc + (d >> 2);
                        const Eigen::Index p = ia + Eigen::Index(edge) * (ib + Eigen::Index(edge) * ic);
                        if (in(ch, p) > best) {
                            best = in(ch, p);
                            where = p;
                        }
                    }
                    out(ch, q) = best;
                    argmax[std::size_t(ch + C * q)] = where;
                }
            }
}

template <typename Scalar>
void maxpool2_backward_add(const Mat<Scalar>& dout, const std::vector<Eigen::Index>& argmax, Mat<Scalar>& din) {
    const Eigen::Index C = dout.rows();
    for (Eigen::Index q = 0; q < dout.cols(); ++q)
        for (Eigen::Index ch = 0; ch < C; ++ch) din(ch, argmax[std::size_t(ch + C * q)]) += dout(ch, q);
}

/// Number of channels depth_to_space produces from `channels` inputs
/// (inputs are zero-padded up to a multiple of 8).
inline Eigen::Index depth_to_space_channels(Eigen::Index channels) { return (channels + 7) / 8; }

/// Reshapes groups of 8 channels at edge r into one channel at edge 2r:
/// channel 8g + (da + 2 db + 4 dc) of voxel (a, b, c) becomes channel g of
/// voxel (2a + da, 2b + db, 2c + dc).
template <typename Scalar>
void depth_to_space(const Mat<Scalar>& in, int edge, Mat<Scalar>& out) {
    const Eigen::Index C = in.rows();
    const Eigen::Index G = depth_to_space_channels(C);
    const int E = 2 * edge;
    out.setZero(G, cube(E));
    for (int c = 0; c < edge; ++c)
        for (int b = 0; b < edge; ++b)
            for (int a = 0; a < edge; ++a) {
                const Eigen::Index p = a + Eigen::Index(edge) * (b + Eigen::Index(edge) * c);
                for (Eigen::Index ch = 0; ch < C; ++ch) {
                    const int d = int(ch % 8);
                    const Eigen::Index q = (2 * a + (d & 1)) +
                                           Eigen::Index(E) * ((2 * b + ((d >> 1) & 1)) + Eigen::Index(E) * (2 * c + (d >> 2)));
                    out(ch / 8, q) = in(ch, p);
                }
            }
}

template <typename Scalar>
void depth_to_space_backward_add(const Mat<Scalar>& dout, int edge, Mat<Scalar>& din) {
    const Eigen::Index C = din.rows();
    const int E = 2 * edge;
    for (int c = 0; c < edge; ++c)
        for (int b = 0; b < edge; ++b)
            for (int a = 0; a < edge; ++a) {
                const Eigen::Index p = a + Eigen::Index(edge) * (b + Eigen::Index(edge) * c);
                for (Eigen::Index ch = 0; ch < C; ++ch) {
                    const int d = int(ch % 8);
                    const Eigen::Index q = (2 * a + (d & 1)) +
                                           Eigen::Index(E) * ((2 * b + ((d >> 1) & 1)) + Eigen::Index(E) * (2 * c + (d >> 2)));
                    din(ch, p) += dout(ch / 8, q);
                }
            }
}

/// Per-channel statistics shared by a batch-normalization forward and
/// backward pass.
template <typename Scalar>
struct NormCache {
    std::vector<Mat<Scalar>> normalized;  // x_hat per sample
    Vec<Scalar> inv_std;
};

/// Batch normalization over every (sample, position) pair of each channel.
/// With `use_batch_stats` the batch's own mean/variance are used and
/// returned in `batch_mean`/`batch_var`; otherwise `mean`/`var` are used.
template <typename Scalar>
void batch_norm_forward(std::vector<Mat<Scalar>>& x, const Vec<Scalar>& gamma, const Vec<Scalar>& beta,
                        bool use_batch_stats, const Vec<Scalar>& mean, const Vec<Scalar>& var, Scalar eps,
                        NormCache<Scalar>* cache, Vec<Scalar>* batch_mean, Vec<Scalar>* batch_var) {
    const Eigen::Index C = gamma.size();
    Vec<Scalar> mu = mean, sigma2 = var;
    if (use_batch_stats) {
        mu.setZero(C);
        sigma2.setZero(C);
        double count = 0;
        for (const auto& m : x) {
            mu += m.rowwise().sum();
            count += double(m.cols());
        }
        mu /= Scalar(count);
        for (const auto& m : x) sigma2 += (m.colwise() - mu).array().square().rowwise().sum().matrix();
        sigma2 /= Scalar(count);
        if (batch_mean) *batch_mean = mu;
        if (batch_var) *batch_var = sigma2;
    }
    const Vec<Scalar> inv_std = (sigma2.array() + eps).rsqrt().matrix();
    if (cache) {
        cache->inv_std = inv_std;
        cache->normalized.resize(x.size());
    }
    for (std::size_t b = 0; b < x.size(); ++b) {
        Mat<Scalar>& m = x[b];
        m = (m.colwise() - mu).array().colwise() * inv_std.array();
        if (cache) cache->normalized[b] = m;
        m = (m.array().colwise() * gamma.array()).colwise() + beta.array();
    }
}

/// Backward pass of batch normalization with batch statistics; `dy` is
/// replaced by the input gradient.
template <typename Scalar>
void batch_norm_backward(std::vector<Mat<Scalar>>& dy, const NormCache<Scalar>& cache, const Vec<Scalar>& gamma,
                         Vec<Scalar>& dgamma, Vec<Scalar>& dbeta) {
    const Eigen::Index C = gamma.size();
    Vec<Scalar> sum_dy = Vec<Scalar>::Zero(C), sum_dy_xhat = Vec<Scalar>::Zero(C);
    double count = 0;
    for (std::size_t b = 0; b < dy.size(); ++b) {
        sum_dy += dy[b].rowwise().sum();
        sum_dy_xhat += dy[b].cwiseProduct(cache.normalized[b]).rowwise().sum();
        count += double(dy[b].cols());
    }
    dgamma += sum_dy_xhat;
    dbeta += sum_dy;
    const Scalar n = Scalar(count);
    const Vec<Scalar> scale = (gamma.array() * cache.inv_std.array() / n).matrix();
    for (std::size_t b = 0; b < dy.size(); ++b) {
        Mat<Scalar>& g = dy[b];
        g = ((g * n).colwise() - sum_dy).array() -
            cache.normalized[b].array().colwise() * sum_dy_xhat.array();
        g = g.array().colwise() * scale.array();
    }
}

/// Backward pass of batch normalization with fixed statistics.
template <typename Scalar>
void batch_norm_backward_fixed(std::vector<Mat<Scalar>>& dy, const NormCache<Scalar>& cache,
                               const Vec<Scalar>& gamma, Vec<Scalar>& dgamma, Vec<Scalar>& dbeta) {
    for (std::size_t b = 0; b < dy.size(); ++b) {
        dgamma += dy[b].cwiseProduct(cache.normalized[b]).rowwise().sum();
        dbeta += dy[b].rowwise().sum();
        dy[b] = dy[b].array().colwise() * (gamma.array() * cache.inv_std.array());
    }
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
}

}  // namespace formfunc::ops
