#include "llab/shift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "llab/rng.hpp"

namespace llab {

std::optional<int> detect_plateau(const std::vector<double>& val_loss_history, double delta1,
                                  int plateau_window) {
    if (val_loss_history.empty()) {
        throw std::invalid_argument("detect_plateau: empty history");
    }
    const int n = static_cast<int>(val_loss_history.size()) - 1; // last epoch index
    for (int e = plateau_window; e <= n; ++e) {
        bool plateau = true;
        for (int t = e - plateau_window + 1; t <= e && plateau; ++t) {
            plateau = (val_loss_history[t - 1] - val_loss_history[t]) < delta1;
        }
        if (plateau) {
            return e;
        }
    }
    return std::nullopt;
}

bool gradient_stable(const std::vector<double>& grad_norm_history, double delta2,
                     int stability_window) {
    if (static_cast<int>(grad_norm_history.size()) < stability_window) {
        throw std::invalid_argument("gradient_stable: history shorter than window");
    }
    const auto begin = grad_norm_history.end() - stability_window;
    const double mean =
        std::accumulate(begin, grad_norm_history.end(), 0.0) / stability_window;
    if (mean == 0.0) {
        return true;
    }
    double var = 0.0;
    for (auto it = begin; it != grad_norm_history.end(); ++it) {
        var += (*it - mean) * (*it - mean);
    }
    var /= stability_window;
    return std::sqrt(var) / std::abs(mean) < delta2;
}

void split_dataset(const Dataset& full, std::uint64_t seed, double val_frac, Dataset& train,
                   Dataset& val) {
    const int n = static_cast<int>(full.samples.size());
    if (n < 2) {
        throw std::invalid_argument("split_dataset: need at least two samples");
    }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, 0x5117));
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform01() * (i + 1));
        std::swap(idx[i], idx[std::min(j, i)]);
    }
    int n_val = static_cast<int>(std::floor(val_frac * n + 0.5));
    n_val = std::clamp(n_val, 1, n - 1);
    train = full;
    val = full;
    train.samples.clear();
    val.samples.clear();
    for (int i = 0; i < n; ++i) {
        (i < n_val ? val : train).samples.push_back(full.samples[idx[i]]);
    }
}

SpeedupReport speedup(int total_epochs, int shift_epoch, double cost_single_epoch,
                      double cost_looped_epoch, double wall_shift, double wall_baseline,
                      double acc_shift, double acc_baseline) {
    SpeedupReport r;
    const double shift_cost = shift_epoch * cost_single_epoch +
                              (total_epochs - shift_epoch) * cost_looped_epoch;
    r.flops_ratio = total_epochs * cost_looped_epoch / shift_cost;
    r.wallclock_ratio = wall_shift > 0.0 ? wall_baseline / wall_shift : 0.0;
    r.accuracy_delta = acc_shift - acc_baseline;
    return r;
}

ShiftReport run_shift(const TrainConfig& stage1_cfg, const TrainConfig& stage2_cfg,
                      const SCPConfig& scp, const Dataset& dataset,
                      const EmbeddingMap& emap) {
    if (stage1_cfg.arch.kind != ArchKind::Single ||
        stage2_cfg.arch.kind != ArchKind::Looped) {
        throw std::invalid_argument("run_shift: stage 1 must be Single, stage 2 Looped");
    }
    if (scp.e_shift_min > scp.e_shift_max || scp.e_shift_min < 0) {
        throw std::invalid_argument("run_shift: invalid shift clamp range");
    }
    const int total_epochs = stage1_cfg.epochs;

    ShiftReport report;
    Dataset train_set, val_set;
    split_dataset(dataset, stage1_cfg.seed, 0.1, train_set, val_set);

    const Model init_single = random_model(Arch::single(), stage1_cfg.seed, stage1_cfg.dim,
                                           emap.vocab_size, stage1_cfg.init_std);

    // Stage I with SCP monitoring on the held-out split.
    report.stage1_val_loss.push_back(evaluate(init_single, emap, val_set).mean_loss);
    int e_shift = -1;
    if (scp.e_shift_max == 0) {
        report.e_shift = 0;
        report.final_model = init_single;
    } else {
        TrainConfig cfg1 = stage1_cfg;
        cfg1.epochs = std::min(total_epochs, scp.e_shift_max);
        const TrainCallback monitor = [&](int epoch, const Model& model, double,
                                          double grad_norm) {
            report.stage1_val_loss.push_back(evaluate(model, emap, val_set).mean_loss);
            report.stage1_grad_norms.push_back(grad_norm);
            if (e_shift < 0) {
                const std::optional<int> plateau =
                    detect_plateau(report.stage1_val_loss, scp.delta1, scp.plateau_window);
                if (plateau) {
                    report.plateau_found = true;
                    report.e_plateau = *plateau;
                    e_shift = std::clamp(report.e_plateau + scp.patience, scp.e_shift_min,
                                         scp.e_shift_max);
                }
            }
            return e_shift < 0 || epoch < e_shift;
        };
        const TrainResult stage1 = train(cfg1, train_set, emap, init_single, monitor);
        if (stage1.aborted) {
            throw std::runtime_error("run_shift: stage 1 aborted (non-finite loss)");
        }
        if (e_shift < 0) {
            // No plateau within the clamp range: fall back to e_shift_max.
            e_shift = std::min(scp.e_shift_max, total_epochs);
        }
        report.e_shift = e_shift;
        report.stage1_metrics = stage1.metrics;
        report.final_model = stage1.model;
        if (static_cast<int>(report.stage1_grad_norms.size()) >= scp.stability_window) {
            report.gradient_stable_at_shift =
                gradient_stable(report.stage1_grad_norms, scp.delta2, scp.stability_window);
        }
    }

    // Stage II: transfer weights unchanged into the Looped-Attn model.
    Model looped;
    looped.arch = stage2_cfg.arch;
    looped.blocks = report.final_model.blocks;
    TrainConfig cfg2 = stage2_cfg;
    cfg2.epochs = total_epochs - report.e_shift;
    if (cfg2.epochs > 0) {
        const TrainResult stage2 = train(cfg2, train_set, emap, looped);
        if (stage2.aborted) {
            throw std::runtime_error("run_shift: stage 2 aborted (non-finite loss)");
        }
        report.stage2_metrics = stage2.metrics;
        report.final_model = stage2.model;
    } else {
        report.final_model = looped;
    }

    // Pure-Looped baseline with the same seed, init stream, split, and budget.
    const Model baseline_init = random_model(stage2_cfg.arch, stage1_cfg.seed,
                                             stage2_cfg.dim, emap.vocab_size,
                                             stage2_cfg.init_std);
    TrainConfig cfg_base = stage2_cfg;
    cfg_base.epochs = total_epochs;
    const TrainResult baseline = train(cfg_base, train_set, emap, baseline_init);
    report.baseline_metrics = baseline.metrics;
    report.baseline_model = baseline.model;

    report.final_eval = evaluate(report.final_model, emap, dataset);
    report.baseline_eval = evaluate(report.baseline_model, emap, dataset);

    const int context_len = dataset.length - 1;
    const int n_train = static_cast<int>(train_set.samples.size());
    const double c_s =
        flop_estimate(Arch::single(), n_train, context_len, stage1_cfg.dim, emap.vocab_size);
    const double c_l = flop_estimate(stage2_cfg.arch, n_train, context_len, stage2_cfg.dim,
                                     emap.vocab_size);
    const double wall_shift =
        (report.stage1_metrics.empty() ? 0.0 : report.stage1_metrics.back().wall_time) +
        (report.stage2_metrics.empty() ? 0.0 : report.stage2_metrics.back().wall_time);
    const double wall_base =
        report.baseline_metrics.empty() ? 0.0 : report.baseline_metrics.back().wall_time;
    const SpeedupReport sp =
        speedup(total_epochs, report.e_shift, c_s, c_l, wall_shift, wall_base,
                report.final_eval.accuracy_total, report.baseline_eval.accuracy_total);
    report.speedup_flops = sp.flops_ratio;
    report.speedup_wallclock = sp.wallclock_ratio;
    report.accuracy_delta = sp.accuracy_delta;
    return report;
}

void write_shift_report_json(const ShiftReport& report, const std::string& path) {
    nlohmann::json j;
    j["e_plateau"] = report.e_plateau;
    j["e_shift"] = report.e_shift;
    j["plateau_found"] = report.plateau_found;
    j["gradient_stable_at_shift"] = report.gradient_stable_at_shift;
    j["speedup_flops"] = report.speedup_flops;
    j["speedup_wallclock"] = report.speedup_wallclock;
    j["accuracy_delta"] = report.accuracy_delta;
    j["final_accuracy_total"] = report.final_eval.accuracy_total;
    j["final_accuracy_low"] = report.final_eval.accuracy_low;
    j["final_accuracy_mid"] = report.final_eval.accuracy_mid;
    j["final_accuracy_high"] = report.final_eval.accuracy_high;
    j["baseline_accuracy_total"] = report.baseline_eval.accuracy_total;
    j["baseline_accuracy_high"] = report.baseline_eval.accuracy_high;
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << j.dump(2) << "\n";
}

} // namespace llab
