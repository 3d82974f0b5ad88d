#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bubblecast/density.hpp"
#include "bubblecast/skew_t.hpp"
#include "bubblecast/tail_weighting.hpp"

namespace bubblecast::mdn {

struct MdnConfig {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t n_mixtures = 10;
    double learning_rate = 1e-3;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double noise_std = -1.0;  // < 0: resolved to 0.1 x robust target scale
    std::size_t horizon = 1;
    std::uint64_t seed = 1;

    /// Diagnostic switch: pin the shape heads (xi = 0, nu = 50) and train
    /// only weights/locations/scales. Lets symmetric-fit sanity checks
    /// compare against plain moment estimates.
    bool freeze_shape_heads = false;

    void validate() const;
};

/// Aligned (conditioning window, target) pairs plus per-row sampling/loss
/// weights. Inputs are stored row-major (rows x input_dim).
struct TrainingSet {
    std::size_t input_dim = 1;
    std::vector<double> inputs;
    std::vector<double> targets;
    tails::SampleWeights weights;

    std::size_t rows() const { return targets.size(); }
    void validate() const;
};

/// Builds (X_t lag window, X_{t+h}) pairs from a series; weights start at 1.
TrainingSet make_training_set(const std::vector<double>& series,
                              std::size_t input_dim, std::size_t horizon);

/// Tail weights from the conditioning value of each row (the most recent
/// lag), using bounds fitted beforehand on the training series.
void apply_tail_weights(TrainingSet& set, const tails::TailBounds& bounds);

/// The five-head skewed-t mixture density network. Two ReLU hidden layers
/// feed parallel heads: softmax -> mixture weights, identity -> locations,
/// softplus (+ floor) -> scales, identity -> shapes, softplus (+ floor) ->
/// degrees of freedom. Parameters live in one flat vector (trunk layers
/// then heads, W before b) so the optimizer and the finite-difference
/// checks can treat the model generically. Immutable after training; safe
/// for concurrent prediction.
struct MdnModel {
    MdnConfig config;
    std::vector<double> in_center;  // robust input scaling, per dimension
    std::vector<double> in_scale;
    std::vector<double> params;

    skewt::MixtureParams forward(const std::vector<double>& x) const;
    DensityPtr predict_density(const std::vector<double>& x) const;
    std::size_t param_count() const;
};

/// Weighted negative log-likelihood over the given rows:
/// -(sum w_t log p(y_t|x_t)) / (sum w_t), log-sum-exp stabilized.
/// Throws loss_diagnostic_error on a non-finite log-density.
double weighted_nll(const MdnModel& model, const TrainingSet& data,
                    const std::vector<std::size_t>& indices);

/// Analytic gradient of weighted_nll with respect to model.params; returns
/// the loss. grad is resized and overwritten.
double weighted_nll_grad(const MdnModel& model, const TrainingSet& data,
                         const std::vector<std::size_t>& indices,
                         std::vector<double>& grad);

struct TrainLogEntry {
    std::size_t epoch;
    double mean_loss;
    double wall_time_s;
    double val_loss;  // NaN when no validation slice was given
};

struct TrainResult {
    MdnModel model;
    std::vector<TrainLogEntry> log;
    double resolved_noise_std = 0.0;
    std::size_t lr_restarts = 0;
};

/// Adam training (beta1 0.9, beta2 0.999, eps 1e-8) with weighted minibatch
/// sampling and fresh Gaussian noise on inputs and targets each draw.
/// Deterministic given cfg.seed. On a non-finite loss the epoch restarts
/// from its checkpoint at half the learning rate, at most 3 times.
TrainResult train(const TrainingSet& data, const MdnConfig& cfg,
                  const TrainingSet* validation = nullptr);

}  // namespace bubblecast::mdn
