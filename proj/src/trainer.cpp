#include "llab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace llab {

int predict(const Model& model, const EmbeddingMap& emap, const std::vector<int>& tokens) {
    const ForwardTrace trace = forward(model, emap, tokens);
    // argmax with ties broken toward the smallest token id
    int best = 0;
    for (int i = 1; i < trace.logits.size(); ++i) {
        if (trace.logits(i) > trace.logits(best)) {
            best = i;
        }
    }
    return best;
}

EvalResult evaluate(const Model& model, const EmbeddingMap& emap, const Dataset& dataset) {
    EvalResult r;
    double loss = 0.0;
    for (const Sample& s : dataset.samples) {
        const std::vector<int> context(s.tokens.begin(), s.tokens.end() - 1);
        const int target = s.tokens.back();
        const ForwardTrace trace = forward(model, emap, context);
        loss += cross_entropy(trace, target);
        int best = 0;
        for (int i = 1; i < trace.logits.size(); ++i) {
            if (trace.logits(i) > trace.logits(best)) {
                best = i;
            }
        }
        const bool correct = best == target;
        switch (s.stratum) {
            case Stratum::Low:
                ++r.n_low;
                r.correct_low += correct;
                break;
            case Stratum::Mid:
                ++r.n_mid;
                r.correct_mid += correct;
                break;
            case Stratum::High:
                ++r.n_high;
                r.correct_high += correct;
                break;
        }
    }
    const int n = r.n_low + r.n_mid + r.n_high;
    if (n == 0) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    r.mean_loss = loss / n;
    r.accuracy_low = r.n_low > 0 ? static_cast<double>(r.correct_low) / r.n_low : 0.0;
    r.accuracy_mid = r.n_mid > 0 ? static_cast<double>(r.correct_mid) / r.n_mid : 0.0;
    r.accuracy_high = r.n_high > 0 ? static_cast<double>(r.correct_high) / r.n_high : 0.0;
    r.accuracy_total =
        static_cast<double>(r.correct_low + r.correct_mid + r.correct_high) / n;
    return r;
}

double flop_estimate(const Arch& arch, int dataset_size, int context_len, int dim,
                     int vocab_size) {
    const double d = dim, n = context_len, v = vocab_size;
    const double f_z = 6.0 * d * d + 4.0 * d * n;           // z-update matmuls
    const double f_e = 6.0 * d * d * n + 4.0 * d * n * n;   // E-update matmuls
    const double f_head = 2.0 * v * d;
    double forward = 0.0;
    switch (arch.kind) {
        case ArchKind::Single:
            forward = f_z + f_head;
            break;
        case ArchKind::Looped:
        case ArchKind::Deep:
            forward = arch.depth * (f_z + f_e) + f_head;
            break;
    }
    // backward counted as 2x forward (two matmuls per forward matmul)
    return 3.0 * forward * dataset_size;
}

namespace {

bool all_finite(const std::vector<ModelParams>& blocks) {
    for (const ModelParams& b : blocks) {
        if (!b.w_k.allFinite() || !b.w_q.allFinite() || !b.w_v.allFinite() ||
            !b.w_h.allFinite()) {
            return false;
        }
    }
    return true;
}

} // namespace

TrainResult train(const TrainConfig& config, const Dataset& dataset, const EmbeddingMap& emap,
                  Model init, const TrainCallback& callback) {
    if (config.epochs < 1 || config.learning_rate < 0.0) {
        throw std::invalid_argument("train: epochs >= 1 and learning_rate >= 0 required");
    }
    TrainResult result;
    result.model = std::move(init);
    Model& model = result.model;

    const Batch batch = to_batch(dataset);
    const int context_len = dataset.length - 1;
    const double flops_per_epoch =
        flop_estimate(model.arch, static_cast<int>(batch.inputs.size()), context_len,
                      emap.dim, emap.vocab_size);

    Eigen::VectorXd m_state, v_state;
    if (config.optimizer == OptimizerKind::Adam) {
        const Eigen::VectorXd theta0 = pack(model.blocks);
        m_state = Eigen::VectorXd::Zero(theta0.size());
        v_state = Eigen::VectorXd::Zero(theta0.size());
    }

    const auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double loss = batch_loss(model, emap, batch);
        const std::vector<ModelParams> grads = grad_full(model, emap, batch);
        const Eigen::VectorXd g = pack(grads);
        const double grad_norm = g.norm();

        if (!std::isfinite(loss) || !std::isfinite(grad_norm)) {
            result.aborted = true;
            result.abort_epoch = epoch;
            result.checkpoints.emplace_back(epoch, model);
            return result;
        }

        Eigen::VectorXd theta = pack(model.blocks);
        if (config.optimizer == OptimizerKind::GD) {
            theta -= config.learning_rate * g;
        } else {
            m_state = config.beta1 * m_state + (1.0 - config.beta1) * g;
            v_state = config.beta2 * v_state +
                      (1.0 - config.beta2) * g.cwiseProduct(g);
            const double bc1 = 1.0 - std::pow(config.beta1, epoch);
            const double bc2 = 1.0 - std::pow(config.beta2, epoch);
            const Eigen::VectorXd m_hat = m_state / bc1;
            const Eigen::VectorXd v_hat = v_state / bc2;
            theta -= config.learning_rate *
                     (m_hat.array() / (v_hat.array().sqrt() + config.eps_adam)).matrix();
        }
        unpack(theta, model.blocks);
        if (!all_finite(model.blocks)) {
            result.aborted = true;
            result.abort_epoch = epoch;
            result.checkpoints.emplace_back(epoch, model);
            return result;
        }

        if (epoch % config.eval_every == 0 || epoch == config.epochs) {
            const EvalResult ev = evaluate(model, emap, dataset);
            EpochMetrics m;
            m.epoch = epoch;
            m.train_loss = loss;
            m.accuracy_total = ev.accuracy_total;
            m.accuracy_low = ev.accuracy_low;
            m.accuracy_mid = ev.accuracy_mid;
            m.accuracy_high = ev.accuracy_high;
            m.grad_norm = grad_norm;
            m.wall_time = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t_start)
                              .count();
            m.flop_estimate = flops_per_epoch * epoch;
            result.metrics.push_back(m);
        }
        if (config.hessian_every > 0 &&
            (epoch % config.hessian_every == 0 || epoch == config.epochs)) {
            result.checkpoints.emplace_back(epoch, model);
        }
        if (callback && !callback(epoch, model, loss, grad_norm)) {
            break;
        }
    }
    return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "epoch,train_loss,accuracy_total,accuracy_low,accuracy_mid,accuracy_high,"
           "grad_norm,wall_time,flop_estimate\n";
    char buf[256];
    for (const EpochMetrics& m : metrics) {
        std::snprintf(buf, sizeof(buf),
                      "%d,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", m.epoch,
                      m.train_loss, m.accuracy_total, m.accuracy_low, m.accuracy_mid,
                      m.accuracy_high, m.grad_norm, m.wall_time, m.flop_estimate);
        out << buf;
    }
}

std::vector<EpochMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    std::string line;
    std::getline(in, line); // header
    std::vector<EpochMetrics> metrics;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        EpochMetrics m;
        std::getline(ss, field, ',');
        m.epoch = std::stoi(field);
        double* cols[] = {&m.train_loss, &m.accuracy_total, &m.accuracy_low,
                          &m.accuracy_mid, &m.accuracy_high, &m.grad_norm,
                          &m.wall_time, &m.flop_estimate};
        for (double* col : cols) {
            std::getline(ss, field, ',');
            *col = std::stod(field);
        }
        metrics.push_back(m);
    }
    return metrics;
}

} // namespace llab
