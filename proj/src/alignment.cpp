#include "llab/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "llab/markov.hpp"
#include "llab/rng.hpp"

namespace llab {

namespace {

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            m(i, j) = scale * rng.normal();
        }
    }
    return m;
}

double spectral_norm(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

Eigen::MatrixXd capped_perturbation(Rng& rng, int d, double cap) {
    Eigen::MatrixXd eps = gaussian_matrix(rng, d, d, 1.0);
    const double norm = spectral_norm(eps);
    if (cap <= 0.0) {
        return Eigen::MatrixXd::Zero(d, d);
    }
    if (norm > cap) {
        eps *= cap / norm;
    }
    return eps;
}

} // namespace

Assumption3Draw sample_assumption3_params(int dim, std::pair<double, double> diag_range,
                                          double eps_scale, std::uint64_t seed,
                                          int vocab_size) {
    if (eps_scale < 0.0 || diag_range.first < 0.0 || diag_range.second < diag_range.first) {
        throw std::invalid_argument("sample_assumption3_params: invalid scales");
    }
    Assumption3Draw draw;
    draw.dim = dim;
    draw.diag_range = diag_range;
    draw.eps_scale = eps_scale;
    draw.seed = seed;
    Rng rng(seed);
    auto diag = [&]() {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) {
            v(i) = diag_range.first + (diag_range.second - diag_range.first) * rng.uniform01();
        }
        return v;
    };
    const Eigen::VectorXd dk = diag(), dq = diag(), dv = diag();
    draw.min_diag = std::min({dk.minCoeff(), dq.minCoeff(), dv.minCoeff()});
    const double cap = eps_scale * draw.min_diag;
    draw.params.w_k = Eigen::MatrixXd(dk.asDiagonal()) + capped_perturbation(rng, dim, cap);
    draw.params.w_q = Eigen::MatrixXd(dq.asDiagonal()) + capped_perturbation(rng, dim, cap);
    draw.params.w_v = Eigen::MatrixXd(dv.asDiagonal()) + capped_perturbation(rng, dim, cap);
    draw.params.w_h = gaussian_matrix(rng, vocab_size, dim, 1.0);
    return draw;
}

AlignmentResult gradient_alignment(const ModelParams& params, const EmbeddingMap& emap,
                                   const Batch& batch, int loops) {
    AlignmentResult r;
    const Eigen::MatrixXd g1_wk =
        grad_direct_path(params, emap, batch, Arch::single(), GradBlock::Wk);
    const Eigen::MatrixXd g2_wk =
        grad_direct_path(params, emap, batch, Arch::looped(loops), GradBlock::Wk);
    const Eigen::MatrixXd g1_wq =
        grad_direct_path(params, emap, batch, Arch::single(), GradBlock::Wq);
    const Eigen::MatrixXd g2_wq =
        grad_direct_path(params, emap, batch, Arch::looped(loops), GradBlock::Wq);
    r.inner_wk = (g1_wk.array() * g2_wk.array()).sum();
    r.inner_wq = (g1_wq.array() * g2_wq.array()).sum();
    return r;
}

AlignmentResult gradient_alignment_full(const ModelParams& params, const EmbeddingMap& emap,
                                        const Batch& batch, int loops) {
    Model single;
    single.arch = Arch::single();
    single.blocks = {params};
    Model looped;
    looped.arch = Arch::looped(loops);
    looped.blocks = {params};
    const std::vector<ModelParams> g1 = grad_full(single, emap, batch);
    const std::vector<ModelParams> g2 = grad_full(looped, emap, batch);
    AlignmentResult r;
    r.inner_wk = (g1[0].w_k.array() * g2[0].w_k.array()).sum();
    r.inner_wq = (g1[0].w_q.array() * g2[0].w_q.array()).sum();
    return r;
}

PreconditionerReport verify_preconditioner(const ModelParams& params,
                                           const EmbeddingMap& emap, const Batch& batch,
                                           int loops) {
    return preconditioner(params, emap, batch, loops);
}

AlignmentSweep alignment_sweep(int draws, int dim, int loops, double eps_scale,
                               std::uint64_t seed, bool adversarial, double tolerance) {
    if (draws < 1) {
        throw std::invalid_argument("alignment_sweep: draws >= 1 required");
    }
    // Fixed evaluation task: default Markov instance embedded at the sweep's
    // dimension; the same batch is reused for every draw.
    const TransitionModel tmodel = build_transition_model(derive_seed(seed, 0xda7a), 3, 3);
    const Dataset data = sample_dataset(tmodel, 32, 4, 2.0, derive_seed(seed, 0xba7c));
    const EmbeddingMap emap = make_embedding(derive_seed(seed, 0xe4b), 3, dim);
    const Batch batch = to_batch(data);

    AlignmentSweep sweep;
    sweep.draws = draws;
    sweep.min_inner_wk = std::numeric_limits<double>::infinity();
    sweep.min_inner_wq = std::numeric_limits<double>::infinity();
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t draw_seed = derive_seed(seed, 1000 + i);
        ModelParams params;
        bool rank_ok = true;
        if (adversarial) {
            Rng rng(draw_seed);
            params.w_k = gaussian_matrix(rng, dim, dim, 1.0);
            params.w_q = gaussian_matrix(rng, dim, dim, 1.0);
            params.w_v = gaussian_matrix(rng, dim, dim, 1.0);
            params.w_h = gaussian_matrix(rng, 3, dim, 1.0);
        } else {
            const Assumption3Draw draw =
                sample_assumption3_params(dim, {0.05, 0.3}, eps_scale, draw_seed, 3);
            params = draw.params;
        }
        const AlignmentResult res = gradient_alignment(params, emap, batch, loops);
        sweep.results.push_back(res);
        sweep.rank_ok.push_back(rank_ok);
        sweep.min_inner_wk = std::min(sweep.min_inner_wk, res.inner_wk);
        sweep.min_inner_wq = std::min(sweep.min_inner_wq, res.inner_wq);
        sweep.violations_wk += res.inner_wk < tolerance;
        sweep.violations_wq += res.inner_wq < tolerance;
    }
    return sweep;
}

void write_alignment_csv(const AlignmentSweep& sweep, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "draw,inner_wk,inner_wq,rank_ok\n";
    char buf[160];
    for (std::size_t i = 0; i < sweep.results.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.12e,%.12e,%d\n", i, sweep.results[i].inner_wk,
                      sweep.results[i].inner_wq, sweep.rank_ok[i] ? 1 : 0);
        out << buf;
    }
}

} // namespace llab
