#pragma once

#include "occupancy/data.hpp"
#include "occupancy/models.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace occupancy::training {

using ad::NamedTensor;
using ad::Tape;
using ad::Var;

// Raised when a gradient or loss turns non-finite.
class NumericAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kProbClamp = 1e-7;

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::optional<double> clip_norm;
    std::uint64_t seed = 0;
    // Early stopping on validation loss; only used when validation data is given.
    std::optional<std::size_t> patience = 10;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_loss;
    std::optional<double> val_accuracy;
    double seconds = 0.0;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    bool early_stopped = false;

    double final_loss() const { return epochs.empty() ? 0.0 : epochs.back().train_loss; }
    // epoch,train_loss,val_loss,val_acc,seconds
    std::string to_csv(bool include_timing = true) const;
};

// Mean over timesteps of the clamped binary cross-entropy; `probs` is [T].
Var bce_per_sample(Var probs, std::span<const int> labels);

// L = (1/N) sum_i l(f(X_i), y_i), evaluated without recording gradients.
double dataset_loss(models::Model& model, std::span<const data::Sample> samples);

// Pooled per-timestep accuracy of thresholded predictions.
double dataset_accuracy(models::Model& model, std::span<const data::Sample> samples, double threshold = 0.5);

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

// One adaptive-moment update from the grads currently held by `params`.
// Applies global-norm clipping first when configured. Throws NumericAbort
// naming the first parameter with a non-finite gradient.
void optimizer_step(const std::vector<NamedTensor>& params, AdamState& state, const TrainConfig& config);

// Mini-batch training with a seeded shuffle each epoch. With validation
// samples and a patience, stops after `patience` epochs without improvement
// and restores the best parameters.
TrainTrace fit(models::Model& model, std::span<const data::Sample> train, std::span<const data::Sample> validation,
               const TrainConfig& config);

} // namespace occupancy::training
