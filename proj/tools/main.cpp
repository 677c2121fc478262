#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "llab/alignment.hpp"
#include "llab/hessian.hpp"
#include "llab/io.hpp"
#include "llab/markov.hpp"
#include "llab/models.hpp"
#include "llab/quadsim.hpp"
#include "llab/rng.hpp"
#include "llab/shift.hpp"
#include "llab/trainer.hpp"

namespace fs = std::filesystem;
using namespace llab;

namespace {

std::uint64_t env_default_seed() {
    if (const char* s = std::getenv("LANDSCAPE_LAB_SEED")) {
        return std::strtoull(s, nullptr, 10);
    }
    return 0;
}

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") {
        return OptimizerKind::Adam;
    }
    if (name == "gd") {
        return OptimizerKind::GD;
    }
    throw CLI::ValidationError("--optimizer", "must be 'adam' or 'gd'");
}

struct LoadedData {
    TransitionModel model;
    Dataset dataset;
};

LoadedData load_data_dir(const std::string& dir) {
    LoadedData d;
    d.model = read_model_json((fs::path(dir) / "model.json").string());
    d.dataset = read_dataset_csv((fs::path(dir) / "dataset.csv").string(), d.model);
    return d;
}

void cmd_gen_data(std::uint64_t seed, int vocab, int matrices, int n, int len, double alpha,
                  const std::string& out) {
    ensure_dir(out);
    const TransitionModel model = build_transition_model(seed, vocab, matrices);
    const Dataset dataset = sample_dataset(model, n, len, alpha, derive_seed(seed, 1));
    write_model_json(model, (fs::path(out) / "model.json").string());
    write_dataset_csv(dataset, (fs::path(out) / "dataset.csv").string());
    RunConfig config;
    config.command = "gen-data";
    config.seed = seed;
    config.params = {{"vocab", std::to_string(vocab)},
                     {"matrices", std::to_string(matrices)},
                     {"n", std::to_string(n)},
                     {"len", std::to_string(len)},
                     {"alpha", std::to_string(alpha)}};
    write_run_config(config, out);
    write_manifest(out);
    std::printf("gen-data: %d samples of length %d written to %s\n", n, len, out.c_str());
}

void cmd_train(const std::string& arch_tag_str, const TrainConfig& base_cfg,
               const std::string& data_dir, const std::string& out) {
    ensure_dir(out);
    const LoadedData data = load_data_dir(data_dir);
    TrainConfig cfg = base_cfg;
    cfg.arch = parse_arch(arch_tag_str);
    const EmbeddingMap emap =
        make_embedding(derive_seed(cfg.seed, 0xe3b), data.model.vocab_size, cfg.dim);
    Model init = random_model(cfg.arch, cfg.seed, cfg.dim, data.model.vocab_size,
                              cfg.init_std);
    const TrainResult result = train(cfg, data.dataset, emap, std::move(init));
    write_metrics_csv(result.metrics, (fs::path(out) / "metrics.csv").string());
    write_checkpoint(result.model, emap, (fs::path(out) / "checkpoint_final.json").string());
    for (const auto& [epoch, model] : result.checkpoints) {
        write_checkpoint(model, emap,
                         (fs::path(out) / ("checkpoint_" + std::to_string(epoch) + ".json"))
                             .string());
    }
    RunConfig config;
    config.command = "train";
    config.seed = cfg.seed;
    config.params = {{"arch", arch_tag_str},
                     {"epochs", std::to_string(cfg.epochs)},
                     {"lr", std::to_string(cfg.learning_rate)},
                     {"optimizer", cfg.optimizer == OptimizerKind::Adam ? "adam" : "gd"},
                     {"dim", std::to_string(cfg.dim)},
                     {"init_std", std::to_string(cfg.init_std)},
                     {"data", fs::absolute(data_dir).string()}};
    write_run_config(config, out);
    write_manifest(out);
    if (result.aborted) {
        throw std::runtime_error("training aborted with non-finite loss at epoch " +
                                 std::to_string(result.abort_epoch));
    }
    std::printf("train: %s finished %d epochs, final loss %.6f\n", arch_tag_str.c_str(),
                cfg.epochs, result.metrics.empty() ? 0.0 : result.metrics.back().train_loss);
}

void cmd_hessian(const std::string& run_dir, const std::string& block_name, int every,
                 int bins, double eps_rel) {
    const RunConfig run_cfg = read_run_config(run_dir);
    const LoadedData data = load_data_dir(run_cfg.params.at("data"));
    const Batch batch = to_batch(data.dataset);
    const HessBlock block = block_name == "wv" ? HessBlock::Wv : HessBlock::Wk;

    std::vector<std::pair<int, std::string>> checkpoints;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("checkpoint_", 0) == 0 && name != "checkpoint_final.json") {
            const int epoch = std::stoi(name.substr(11));
            if (every <= 0 || epoch % every == 0) {
                checkpoints.emplace_back(epoch, entry.path().string());
            }
        }
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    if (checkpoints.empty()) {
        throw CLI::ValidationError("--run", "no periodic checkpoints in " + run_dir +
                                               " (train with --hessian-every)");
    }
    std::vector<SpectrumReport> reports;
    Eigen::VectorXd prev;
    for (const auto& [epoch, path] : checkpoints) {
        EmbeddingMap emap;
        const Model model = read_checkpoint(path, emap);
        const Eigen::MatrixXd h = hessian_block(model, emap, batch, block);
        const Eigen::VectorXd spec = eigenspectrum(h);
        reports.push_back(analyze_spectrum(epoch, block_name, spec,
                                           prev.size() > 0 ? &prev : nullptr, bins,
                                           eps_rel));
        prev = spec;
    }
    write_spectrum_csv(reports, (fs::path(run_dir) / ("spectra_" + block_name + ".csv"))
                                    .string());
    write_spectrum_metrics_csv(
        reports, (fs::path(run_dir) / ("spectrum_metrics_" + block_name + ".csv")).string());
    write_manifest(run_dir);
    std::printf("hessian: %zu spectra for block %s written to %s\n", reports.size(),
                block_name.c_str(), run_dir.c_str());
}

void cmd_simulate_quad(const std::string& instances, int k, double tau,
                       std::uint64_t seed, const std::string& out) {
    ensure_dir(out);
    std::vector<QuadLandscape> lands;
    if (instances.rfind("random:", 0) == 0) {
        const int count = std::stoi(instances.substr(7));
        for (int i = 0; i < count; ++i) {
            lands.push_back(random_instance(derive_seed(seed, i), 2 + i % 15, 8));
        }
    } else {
        lands.push_back(read_instance_json(instances));
    }
    std::ofstream summary(fs::path(out) / "summary.csv");
    summary << "instance,capacity,capacity_dom,force_norm,closed_form_norm,bound_holds\n";
    char buf[256];
    for (std::size_t i = 0; i < lands.size(); ++i) {
        const QuadLandscape& land = lands[i];
        const QuadTrajectory traj = simulate(land, k);
        const CapacityBound cap = capacity_bound(land, tau);
        const Eigen::VectorXd closed = unforced_closed_form(land, k);
        const bool holds = cap.infinite || closed.norm() <= cap.total;
        write_trajectory_csv(traj, land, cap.total,
                             (fs::path(out) / ("traj_" + std::to_string(i) + ".csv"))
                                 .string());
        std::snprintf(buf, sizeof(buf), "%zu,%.12e,%.12e,%.12e,%.12e,%d\n", i, cap.total,
                      cap.dominant, traj.cumulative_force.back().norm(), closed.norm(),
                      holds ? 1 : 0);
        summary << buf;
    }
    summary.close();
    RunConfig config;
    config.command = "simulate-quad";
    config.seed = seed;
    config.params = {{"instances", instances},
                     {"k", std::to_string(k)},
                     {"tau", std::to_string(tau)}};
    write_run_config(config, out);
    write_manifest(out);
    std::printf("simulate-quad: %zu instances simulated for %d steps\n", lands.size(), k);
}

void cmd_simulate_general(int count, int k, std::uint64_t seed, const std::string& out) {
    ensure_dir(out);
    std::ofstream summary(fs::path(out) / "summary.csv");
    summary << "instance,unforced_force_norm,bound,bound_holds\n";
    char buf[192];
    int holds = 0;
    for (int i = 0; i < count; ++i) {
        const QuadLandscape base = random_instance(derive_seed(seed, i), 2 + i % 15, 8);
        Rng rng(derive_seed(seed, 5000 + i));
        const int d_v = static_cast<int>(base.theta_v0.size());
        Eigen::MatrixXd g(d_v, d_v);
        for (int c = 0; c < d_v; ++c) {
            for (int r = 0; r < d_v; ++r) {
                g(r, c) = rng.normal();
            }
        }
        const Eigen::MatrixXd psd = 0.1 * (g * g.transpose()) / d_v;
        const GeneralLandscape gen =
            make_affine_general(base, psd, [](int step) { return 0.5 + 0.0 * step; });
        const GeneralResult res = simulate_general(gen, k);
        holds += res.bound_holds;
        std::snprintf(buf, sizeof(buf), "%d,%.12e,%.12e,%d\n", i, res.unforced_force_norm,
                      res.bound, res.bound_holds ? 1 : 0);
        summary << buf;
    }
    summary.close();
    RunConfig config;
    config.command = "simulate-general";
    config.seed = seed;
    config.params = {{"instances", std::to_string(count)}, {"k", std::to_string(k)}};
    write_run_config(config, out);
    write_manifest(out);
    std::printf("simulate-general: bound held on %d/%d instances\n", holds, count);
}

void cmd_shift(int epochs, int loops, const SCPConfig& scp, std::uint64_t seed, int dim,
               double init_std, double lr, const std::string& data_dir,
               const std::string& out) {
    ensure_dir(out);
    const LoadedData data = load_data_dir(data_dir);
    const EmbeddingMap emap =
        make_embedding(derive_seed(seed, 0xe3b), data.model.vocab_size, dim);
    TrainConfig stage1;
    stage1.arch = Arch::single();
    stage1.epochs = epochs;
    stage1.learning_rate = lr;
    stage1.seed = seed;
    stage1.dim = dim;
    stage1.init_std = init_std;
    TrainConfig stage2 = stage1;
    stage2.arch = Arch::looped(loops);
    const ShiftReport report = run_shift(stage1, stage2, scp, data.dataset, emap);
    write_shift_report_json(report, (fs::path(out) / "shift_report.json").string());
    write_metrics_csv(report.stage1_metrics, (fs::path(out) / "stage1_metrics.csv").string());
    write_metrics_csv(report.stage2_metrics, (fs::path(out) / "stage2_metrics.csv").string());
    write_metrics_csv(report.baseline_metrics,
                      (fs::path(out) / "baseline_metrics.csv").string());
    RunConfig config;
    config.command = "shift";
    config.seed = seed;
    config.params = {{"epochs", std::to_string(epochs)},
                     {"t", std::to_string(loops)},
                     {"delta1", std::to_string(scp.delta1)},
                     {"delta2", std::to_string(scp.delta2)},
                     {"data", fs::absolute(data_dir).string()}};
    write_run_config(config, out);
    write_manifest(out);
    std::printf("shift: E_shift=%d, FLOP speedup %.3f, accuracy delta %+.4f\n",
                report.e_shift, report.speedup_flops, report.accuracy_delta);
}

void cmd_align(int draws, int dim, int loops, double eps_scale, std::uint64_t seed,
               const std::string& out) {
    ensure_dir(out);
    const AlignmentSweep sweep = alignment_sweep(draws, dim, loops, eps_scale, seed);
    const AlignmentSweep adversarial =
        alignment_sweep(std::max(draws / 10, 10), dim, loops, eps_scale, seed, true);
    write_alignment_csv(sweep, (fs::path(out) / "alignment.csv").string());
    nlohmann::json j;
    j["draws"] = sweep.draws;
    j["violations_wk"] = sweep.violations_wk;
    j["violations_wq"] = sweep.violations_wq;
    j["min_inner_wk"] = sweep.min_inner_wk;
    j["min_inner_wq"] = sweep.min_inner_wq;
    j["adversarial_draws"] = adversarial.draws;
    j["adversarial_violations_wk"] = adversarial.violations_wk;
    j["adversarial_violations_wq"] = adversarial.violations_wq;
    std::ofstream sj(fs::path(out) / "summary.json");
    sj << j.dump(2) << "\n";
    sj.close();
    RunConfig config;
    config.command = "align";
    config.seed = seed;
    config.params = {{"draws", std::to_string(draws)},
                     {"d", std::to_string(dim)},
                     {"t", std::to_string(loops)},
                     {"eps_scale", std::to_string(eps_scale)}};
    write_run_config(config, out);
    write_manifest(out);
    std::printf("align: %d draws, %d/%d violations (wk/wq), min inner %.3e/%.3e\n",
                sweep.draws, sweep.violations_wk, sweep.violations_wq, sweep.min_inner_wk,
                sweep.min_inner_wq);
}

void cmd_report(const std::vector<std::string>& run_dirs, const std::string& out) {
    ensure_dir(out);
    std::map<int, std::vector<EpochMetrics>> by_epoch;
    for (const std::string& dir : run_dirs) {
        const std::vector<std::string> bad = verify_manifest(dir);
        if (!bad.empty()) {
            throw std::runtime_error("manifest hash mismatch in " + dir + ": " + bad.front());
        }
        for (const EpochMetrics& m : read_metrics_csv((fs::path(dir) / "metrics.csv")
                                                          .string())) {
            by_epoch[m.epoch].push_back(m);
        }
    }
    std::ofstream csv(fs::path(out) / "report.csv");
    csv << "epoch,runs,acc_total_mean,acc_total_min,acc_total_max,acc_high_mean,"
           "loss_mean\n";
    char buf[256];
    for (const auto& [epoch, rows] : by_epoch) {
        double acc_sum = 0.0, acc_min = 1e300, acc_max = -1e300, high_sum = 0.0,
               loss_sum = 0.0;
        for (const EpochMetrics& m : rows) {
            acc_sum += m.accuracy_total;
            acc_min = std::min(acc_min, m.accuracy_total);
            acc_max = std::max(acc_max, m.accuracy_total);
            high_sum += m.accuracy_high;
            loss_sum += m.train_loss;
        }
        const double n = static_cast<double>(rows.size());
        std::snprintf(buf, sizeof(buf), "%d,%zu,%.12e,%.12e,%.12e,%.12e,%.12e\n", epoch,
                      rows.size(), acc_sum / n, acc_min, acc_max, high_sum / n,
                      loss_sum / n);
        csv << buf;
    }
    csv.close();
    write_manifest(out);
    std::printf("report: merged %zu run(s) into %s\n", run_dirs.size(), out.c_str());
}

void cmd_reproduce(const std::string& figure, std::uint64_t seed, const std::string& out) {
    ensure_dir(out);
    const TransitionModel tmodel = build_transition_model(seed, 3, 3);
    const Dataset dataset = sample_dataset(tmodel, 500, 4, 2.0, derive_seed(seed, 1));
    const int dim = 8;
    const EmbeddingMap emap = make_embedding(derive_seed(seed, 0xe3b), 3, dim);

    auto run = [&](const Arch& arch, int hessian_every) {
        TrainConfig cfg;
        cfg.arch = arch;
        cfg.seed = seed;
        cfg.dim = dim;
        cfg.hessian_every = hessian_every;
        Model init = random_model(arch, seed, dim, 3, cfg.init_std);
        return train(cfg, dataset, emap, std::move(init));
    };

    if (figure == "4b") {
        std::ofstream csv(fs::path(out) / "figure4b.csv");
        csv << "arch,epoch,accuracy_low,accuracy_high,accuracy_total\n";
        char buf[192];
        for (const std::string& tag : {std::string("single"), std::string("looped:3")}) {
            const TrainResult r = run(parse_arch(tag), 0);
            for (const EpochMetrics& m : r.metrics) {
                std::snprintf(buf, sizeof(buf), "%s,%d,%.12e,%.12e,%.12e\n", tag.c_str(),
                              m.epoch, m.accuracy_low, m.accuracy_high, m.accuracy_total);
                csv << buf;
            }
        }
    } else if (figure == "4c") {
        const Batch batch = to_batch(dataset);
        std::vector<SpectrumReport> all;
        for (const std::string& tag : {std::string("single"), std::string("looped:3")}) {
            const TrainResult r = run(parse_arch(tag), 50);
            Eigen::VectorXd prev;
            for (const auto& [epoch, model] : r.checkpoints) {
                const Eigen::MatrixXd h = hessian_block(model, emap, batch, HessBlock::Wv);
                const Eigen::VectorXd spec = eigenspectrum(h);
                all.push_back(analyze_spectrum(epoch, tag + ":wv", spec,
                                               prev.size() > 0 ? &prev : nullptr));
                prev = spec;
            }
        }
        write_spectrum_metrics_csv(all, (fs::path(out) / "figure4c.csv").string());
    } else if (figure == "6") {
        SCPConfig scp;
        TrainConfig stage1;
        stage1.arch = Arch::single();
        stage1.seed = seed;
        stage1.dim = dim;
        TrainConfig stage2 = stage1;
        stage2.arch = Arch::looped(3);
        const ShiftReport report = run_shift(stage1, stage2, scp, dataset, emap);
        write_shift_report_json(report, (fs::path(out) / "figure6.json").string());
    } else if (figure == "7") {
        std::ofstream csv(fs::path(out) / "figure7.csv");
        csv << "arch,length,accuracy_total,accuracy_simple,n_simple\n";
        char buf[192];
        double train_max_ic = 0.0;
        for (const Sample& s : dataset.samples) {
            train_max_ic = std::max(train_max_ic, s.ic);
        }
        for (const std::string& tag : {std::string("single"), std::string("looped:3")}) {
            const TrainResult r = run(parse_arch(tag), 0);
            for (int len : {8, 11, 14, 17}) {
                const Dataset test = make_length_gen_testset(tmodel, len, 5000, 2.0,
                                                            derive_seed(seed, 100 + len));
                int correct = 0, simple = 0, simple_correct = 0;
                for (const Sample& s : test.samples) {
                    const std::vector<int> ctx(s.tokens.begin(), s.tokens.end() - 1);
                    const bool ok = predict(r.model, emap, ctx) == s.tokens.back();
                    correct += ok;
                    if (s.ic <= train_max_ic) {
                        ++simple;
                        simple_correct += ok;
                    }
                }
                const int n = static_cast<int>(test.samples.size());
                std::snprintf(buf, sizeof(buf), "%s,%d,%.12e,%.12e,%d\n", tag.c_str(), len,
                              static_cast<double>(correct) / n,
                              simple > 0 ? static_cast<double>(simple_correct) / simple
                                         : 0.0,
                              simple);
                csv << buf;
            }
        }
    } else {
        throw CLI::ValidationError("--figure", "supported figures: 4b, 4c, 6, 7");
    }
    RunConfig config;
    config.command = "reproduce";
    config.seed = seed;
    config.params = {{"figure", figure}};
    write_run_config(config, out);
    write_manifest(out);
    std::printf("reproduce: figure %s data written to %s\n", figure.c_str(), out.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"landscape-lab: loss-landscape laboratory for looped attention models"};
    app.require_subcommand(1);
    const std::uint64_t env_seed = env_default_seed();

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a Markov synthetic dataset");
    std::uint64_t gd_seed = env_seed;
    int gd_vocab = 3, gd_matrices = 3, gd_n = 500, gd_len = 4;
    double gd_alpha = 2.0;
    std::string gd_out = "runs/data";
    gen->add_option("--seed", gd_seed);
    gen->add_option("--vocab", gd_vocab);
    gen->add_option("--matrices", gd_matrices);
    gen->add_option("--n", gd_n);
    gen->add_option("--len", gd_len);
    gen->add_option("--alpha", gd_alpha);
    gen->add_option("--out", gd_out);

    // train
    auto* tr = app.add_subcommand("train", "Train an architecture on a dataset");
    std::string tr_arch = "looped:3", tr_opt = "adam", tr_data, tr_out = "runs/train";
    TrainConfig tr_cfg;
    tr_cfg.seed = env_seed;
    tr->add_option("--arch", tr_arch);
    tr->add_option("--epochs", tr_cfg.epochs);
    tr->add_option("--lr", tr_cfg.learning_rate);
    tr->add_option("--optimizer", tr_opt);
    tr->add_option("--seed", tr_cfg.seed);
    tr->add_option("--dim", tr_cfg.dim);
    tr->add_option("--init-std", tr_cfg.init_std);
    tr->add_option("--eval-every", tr_cfg.eval_every);
    tr->add_option("--hessian-every", tr_cfg.hessian_every);
    tr->add_option("--data", tr_data)->required();
    tr->add_option("--out", tr_out);

    // hessian
    auto* he = app.add_subcommand("hessian", "Hessian spectra along a trajectory");
    std::string he_run, he_block = "wv";
    int he_every = 10, he_bins = 30;
    double he_eps = 0.05;
    he->add_option("--run", he_run)->required();
    he->add_option("--block", he_block)->check(CLI::IsMember({"wv", "wk"}));
    he->add_option("--every", he_every);
    he->add_option("--bins", he_bins);
    he->add_option("--eps-rel", he_eps);

    // simulate-quad
    auto* sq = app.add_subcommand("simulate-quad", "Setting-1 quadratic GD simulator");
    std::string sq_instances = "random:100", sq_out = "runs/quad";
    int sq_k = 5000;
    double sq_tau = 0.5;
    std::uint64_t sq_seed = env_seed;
    sq->add_option("--instances", sq_instances);
    sq->add_option("--k", sq_k);
    sq->add_option("--tau", sq_tau);
    sq->add_option("--seed", sq_seed);
    sq->add_option("--out", sq_out);

    // simulate-general
    auto* sg = app.add_subcommand("simulate-general", "Setting-2 time-varying simulator");
    int sg_count = 50, sg_k = 5000;
    std::uint64_t sg_seed = env_seed;
    std::string sg_out = "runs/general";
    sg->add_option("--instances", sg_count);
    sg->add_option("--k", sg_k);
    sg->add_option("--seed", sg_seed);
    sg->add_option("--out", sg_out);

    // shift
    auto* sh = app.add_subcommand("shift", "SHIFT staged training with SCP");
    int sh_epochs = 600, sh_t = 3, sh_dim = 8;
    SCPConfig sh_scp;
    std::uint64_t sh_seed = env_seed;
    double sh_lr = 1e-3, sh_init_std = 0.02;
    std::string sh_data, sh_out = "runs/shift";
    sh->add_option("--epochs", sh_epochs);
    sh->add_option("--t", sh_t);
    sh->add_option("--delta1", sh_scp.delta1);
    sh->add_option("--plateau-window", sh_scp.plateau_window);
    sh->add_option("--patience", sh_scp.patience);
    sh->add_option("--delta2", sh_scp.delta2);
    sh->add_option("--stability-window", sh_scp.stability_window);
    sh->add_option("--shift-min", sh_scp.e_shift_min);
    sh->add_option("--shift-max", sh_scp.e_shift_max);
    sh->add_option("--seed", sh_seed);
    sh->add_option("--dim", sh_dim);
    sh->add_option("--lr", sh_lr);
    sh->add_option("--init-std", sh_init_std);
    sh->add_option("--data", sh_data)->required();
    sh->add_option("--out", sh_out);

    // align
    auto* al = app.add_subcommand("align", "Theorem-3 gradient alignment sweep");
    int al_draws = 1000, al_d = 6, al_t = 3;
    double al_eps = 1e-3;
    std::uint64_t al_seed = env_seed;
    std::string al_out = "runs/align";
    al->add_option("--draws", al_draws);
    al->add_option("--d", al_d);
    al->add_option("--t", al_t);
    al->add_option("--eps-scale", al_eps);
    al->add_option("--seed", al_seed);
    al->add_option("--out", al_out);

    // report
    auto* re = app.add_subcommand("report", "Merge metrics across run directories");
    std::vector<std::string> re_runs;
    std::string re_out = "runs/report";
    re->add_option("--runs", re_runs)->required()->expected(-1);
    re->add_option("--out", re_out);

    // reproduce
    auto* rp = app.add_subcommand("reproduce", "Paper-figure experiment recipes");
    std::string rp_figure = "4b", rp_out = "runs/reproduce";
    std::uint64_t rp_seed = env_seed;
    rp->add_option("--figure", rp_figure);
    rp->add_option("--seed", rp_seed);
    rp->add_option("--out", rp_out);

    try {
        app.parse(argc, argv);
        if (*gen) {
            cmd_gen_data(gd_seed, gd_vocab, gd_matrices, gd_n, gd_len, gd_alpha, gd_out);
        } else if (*tr) {
            tr_cfg.optimizer = parse_optimizer(tr_opt);
            cmd_train(tr_arch, tr_cfg, tr_data, tr_out);
        } else if (*he) {
            cmd_hessian(he_run, he_block, he_every, he_bins, he_eps);
        } else if (*sq) {
            cmd_simulate_quad(sq_instances, sq_k, sq_tau, sq_seed, sq_out);
        } else if (*sg) {
            cmd_simulate_general(sg_count, sg_k, sg_seed, sg_out);
        } else if (*sh) {
            cmd_shift(sh_epochs, sh_t, sh_scp, sh_seed, sh_dim, sh_init_std, sh_lr, sh_data,
                      sh_out);
        } else if (*al) {
            cmd_align(al_draws, al_d, al_t, al_eps, al_seed, al_out);
        } else if (*re) {
            cmd_report(re_runs, re_out);
        } else if (*rp) {
            cmd_reproduce(rp_figure, rp_seed, rp_out);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 2;
    }
    return 0;
}
