#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "formfunc/vae/model.hpp"

namespace formfunc {

struct GradCheckEntry {
    std::string parameter;
    Eigen::Index index = 0;
    double analytic = 0;
    double numeric = 0;
    double relative_error = 0;
};

struct GradCheckResult {
    double max_relative_error = 0;
    std::vector<GradCheckEntry> entries;
};

/// |a - n| / max(|a| + |n|, floor): symmetric relative error that falls back
/// to an absolute one for gradients near zero.
double gradient_relative_error(double analytic, double numeric, double floor = 1e-7);

/// Compares backprop gradients of the batch objective on one sample with
/// central differences at step `epsilon`, for `count` parameters drawn
/// uniformly (seeded) from all trainable tensors. Batch norm runs on batch
/// statistics without touching the running statistics, and `noise` fixes the
/// reparameterization sample, so the objective is a deterministic function
/// of the parameters.
GradCheckResult grad_check(Vae<double>& model, const VoxelGrid& sample, const Eigen::VectorXd& noise, double epsilon,
                           int count = 100, std::uint64_t seed = 1, double alpha = 10.0);

}  // namespace formfunc
