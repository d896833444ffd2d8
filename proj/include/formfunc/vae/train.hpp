#pragma once

#include <functional>
#include <span>
#include <vector>

#include "formfunc/vae/model.hpp"

namespace formfunc {

struct EpochStats {
    int epoch = 0;
    double loss = 0;            // mean per-batch objective
    double reconstruction = 0;  // mean per-batch reconstruction term
    double predicted_occupancy = 0;
    double mean_gamma = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;

    std::vector<double> losses() const;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minimizes the weighted reconstruction loss plus the soft-free-bits
/// regularizer over `data`. Deterministic for a given config.rng_seed.
/// Throws Error on an empty dataset, a dim mismatch, or a non-finite loss.
/// Batch-norm running statistics are re-estimated over `data` at the end.
TrainHistory train(Model& model, std::span<const VoxelGrid> data, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Replaces batch-norm running statistics with averages over `data`,
/// encoded and decoded at the posterior means.
void recalibrate_norms(Model& model, std::span<const VoxelGrid> data, int batch_size);

/// Mean IoU between each grid and the thresholded decode of its mean code.
double mean_reconstruction_iou(const Model& model, std::span<const VoxelGrid> data, float threshold = 0.5f);

}  // namespace formfunc
