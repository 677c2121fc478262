#ifndef LLAB_TRAINER_HPP
#define LLAB_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "llab/models.hpp"

namespace llab {

enum class OptimizerKind { GD, Adam };

struct TrainConfig {
    Arch arch;
    int epochs = 600;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    std::uint64_t seed = 0;
    int eval_every = 1;
    int hessian_every = 0; // 0 = no periodic checkpoints
    int dim = 8;
    double init_std = 0.02;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double accuracy_total = 0.0;
    double accuracy_low = 0.0;
    double accuracy_mid = 0.0;
    double accuracy_high = 0.0;
    double grad_norm = 0.0;
    double wall_time = 0.0;     // seconds since training start
    double flop_estimate = 0.0; // cumulative matmul FLOPs
};

struct EvalResult {
    double mean_loss = 0.0;
    double accuracy_total = 0.0;
    double accuracy_low = 0.0;
    double accuracy_mid = 0.0;
    double accuracy_high = 0.0;
    int n_low = 0, n_mid = 0, n_high = 0;
    int correct_low = 0, correct_mid = 0, correct_high = 0;
};

struct TrainResult {
    Model model;
    std::vector<EpochMetrics> metrics;
    std::vector<std::pair<int, Model>> checkpoints; // (epoch, params)
    bool aborted = false;
    int abort_epoch = -1;
};

/// Called after each epoch's update with the post-update model; return false
/// to stop training early (used by the SHIFT stage-1 monitor).
using TrainCallback =
    std::function<bool(int epoch, const Model& model, double train_loss, double grad_norm)>;

/// Full-batch training with GD or Adam; deterministic given config.seed.
TrainResult train(const TrainConfig& config, const Dataset& dataset, const EmbeddingMap& emap,
                  Model init, const TrainCallback& callback = nullptr);

EvalResult evaluate(const Model& model, const EmbeddingMap& emap, const Dataset& dataset);

int predict(const Model& model, const EmbeddingMap& emap, const std::vector<int>& tokens);

/// Matmul FLOPs for one epoch of full-batch forward+backward (backward
/// counted as twice the forward cost). context_len = L - 1.
double flop_estimate(const Arch& arch, int dataset_size, int context_len, int dim,
                     int vocab_size);

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);
std::vector<EpochMetrics> read_metrics_csv(const std::string& path);

} // namespace llab

#endif
