#ifndef LLAB_SHIFT_HPP
#define LLAB_SHIFT_HPP

#include <optional>
#include <string>
#include <vector>

#include "llab/trainer.hpp"

namespace llab {

struct SCPConfig {
    double delta1 = 1e-4;     // minimum validation-loss decrease per epoch
    int plateau_window = 10;  // consecutive qualifying steps P
    int patience = 30;        // W
    double delta2 = 0.2;      // gradient-norm coefficient-of-variation threshold
    int stability_window = 10;
    int e_shift_min = 0;
    int e_shift_max = 300;
};

/// history[0] is the epoch-0 (pre-training) validation loss; history[e] the
/// loss after epoch e. Returns the earliest epoch e such that each of the P
/// steps ending at e decreased the loss by less than delta1.
std::optional<int> detect_plateau(const std::vector<double>& val_loss_history, double delta1,
                                  int plateau_window);

/// Coefficient of variation (population std / mean) of the trailing window.
bool gradient_stable(const std::vector<double>& grad_norm_history, double delta2,
                     int stability_window);

struct ShiftReport {
    int e_plateau = -1; // -1 when never detected (fallback to e_shift_max)
    int e_shift = 0;
    bool plateau_found = false;
    bool gradient_stable_at_shift = false;
    std::vector<EpochMetrics> stage1_metrics;
    std::vector<EpochMetrics> stage2_metrics;
    std::vector<EpochMetrics> baseline_metrics;
    std::vector<double> stage1_val_loss; // index 0 = epoch 0
    std::vector<double> stage1_grad_norms;
    EvalResult final_eval;
    EvalResult baseline_eval;
    double speedup_flops = 0.0;
    double speedup_wallclock = 0.0;
    double accuracy_delta = 0.0; // shift minus baseline, total accuracy
    Model final_model;
    Model baseline_model;
};

/// Splits the dataset into a seeded 90/10 train/validation split.
void split_dataset(const Dataset& full, std::uint64_t seed, double val_frac, Dataset& train,
                   Dataset& val);

/// Stage I: Single-Attn until E_shift = clamp(E_plateau + W); Stage II:
/// weights copied unchanged into Looped-Attn for the remaining budget. The
/// pure-Looped baseline shares the seed, init, split, and total budget.
ShiftReport run_shift(const TrainConfig& stage1, const TrainConfig& stage2,
                      const SCPConfig& scp, const Dataset& dataset,
                      const EmbeddingMap& emap);

struct SpeedupReport {
    double flops_ratio = 0.0;
    double wallclock_ratio = 0.0;
    double accuracy_delta = 0.0;
};

/// FLOP ratio S*c_L / (E*c_S + (S-E)*c_L) with per-epoch costs from
/// flop_estimate.
SpeedupReport speedup(int total_epochs, int shift_epoch, double cost_single_epoch,
                      double cost_looped_epoch, double wall_shift, double wall_baseline,
                      double acc_shift, double acc_baseline);

void write_shift_report_json(const ShiftReport& report, const std::string& path);

} // namespace llab

#endif
