#include "llab/hessian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace llab {

namespace {

constexpr double kHistFloor = 1e-8;

Eigen::VectorXd vec_cm(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

// Log-spaced edges [floor, hi]; magnitudes below floor go to the underflow
// bin (index = bins), others into [0, bins).
std::vector<double> log_edges(double hi, int bins) {
    if (hi <= kHistFloor) {
        hi = kHistFloor * (1.0 + 1e-12);
    }
    std::vector<double> edges(bins + 1);
    const double l0 = std::log(kHistFloor);
    const double l1 = std::log(hi);
    for (int i = 0; i <= bins; ++i) {
        edges[i] = std::exp(l0 + (l1 - l0) * i / bins);
    }
    edges.back() = hi;
    return edges;
}

int bin_index(double mag, const std::vector<double>& edges) {
    const int bins = static_cast<int>(edges.size()) - 1;
    if (mag < edges.front()) {
        return bins; // underflow bin
    }
    if (mag >= edges.back()) {
        return bins - 1;
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), mag);
    return static_cast<int>(it - edges.begin()) - 1;
}

double entropy_of_counts(const std::vector<double>& counts) {
    double total = 0.0;
    for (double c : counts) {
        total += c;
    }
    if (total <= 0.0) {
        return 0.0;
    }
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            const double p = c / total;
            h -= p * std::log(p);
        }
    }
    return h;
}

std::vector<double> sorted_magnitudes_desc(const Eigen::VectorXd& spec) {
    std::vector<double> mags(spec.size());
    for (int i = 0; i < spec.size(); ++i) {
        mags[i] = std::abs(spec(i));
    }
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    return mags;
}

} // namespace

std::string hess_block_name(HessBlock block) {
    return block == HessBlock::Wv ? "wv" : "wk";
}

std::string shape_name(ValleyShape s) {
    switch (s) {
        case ValleyShape::UShaped: return "U";
        case ValleyShape::VShaped: return "V";
        case ValleyShape::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

Eigen::MatrixXd hessian_fd(const GradFn& grad, const Eigen::VectorXd& theta0, double h_rel) {
    if (h_rel <= 0.0) {
        throw std::invalid_argument("hessian_fd: step must be positive");
    }
    const int n = static_cast<int>(theta0.size());
    const double h = h_rel * std::max(1.0, theta0.cwiseAbs().maxCoeff());
    Eigen::MatrixXd hess(n, n);
    Eigen::VectorXd theta = theta0;
    for (int j = 0; j < n; ++j) {
        theta(j) = theta0(j) + h;
        const Eigen::VectorXd gp = grad(theta);
        theta(j) = theta0(j) - h;
        const Eigen::VectorXd gm = grad(theta);
        theta(j) = theta0(j);
        hess.col(j) = (gp - gm) / (2.0 * h);
    }
    if (!hess.allFinite()) {
        throw std::runtime_error("hessian_fd: non-finite entries");
    }
    return 0.5 * (hess + hess.transpose());
}

Eigen::MatrixXd hessian_block(const Model& model, const EmbeddingMap& emap,
                              const Batch& batch, HessBlock block, double h_rel) {
    const int d = emap.dim;
    Model work = model;
    const GradFn grad = [&](const Eigen::VectorXd& theta) {
        Eigen::MatrixXd& target =
            block == HessBlock::Wv ? work.blocks[0].w_v : work.blocks[0].w_k;
        target = Eigen::Map<const Eigen::MatrixXd>(theta.data(), d, d);
        const std::vector<ModelParams> g = grad_full(work, emap, batch);
        return vec_cm(block == HessBlock::Wv ? g[0].w_v : g[0].w_k);
    };
    const Eigen::MatrixXd& m0 =
        block == HessBlock::Wv ? model.blocks[0].w_v : model.blocks[0].w_k;
    const Eigen::MatrixXd hess = hessian_fd(grad, vec_cm(m0), h_rel);
    work = model; // restore
    return hess;
}

Eigen::VectorXd eigenspectrum(const Eigen::MatrixXd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenspectrum: eigensolver failed");
    }
    Eigen::VectorXd vals = solver.eigenvalues(); // ascending
    return vals.reverse();
}

double matrix_entropy(const Eigen::VectorXd& spectrum, int bins) {
    if (bins < 2) {
        throw std::invalid_argument("matrix_entropy: bins >= 2 required");
    }
    const double hi = spectrum.size() > 0 ? spectrum.cwiseAbs().maxCoeff() : 0.0;
    const std::vector<double> edges = log_edges(hi, bins);
    std::vector<double> counts(bins + 1, 0.0);
    for (int i = 0; i < spectrum.size(); ++i) {
        counts[bin_index(std::abs(spectrum(i)), edges)] += 1.0;
    }
    return entropy_of_counts(counts);
}

PairStats pair_statistics(const Eigen::VectorXd& spec_prev, const Eigen::VectorXd& spec_curr,
                          int bins) {
    if (spec_prev.size() != spec_curr.size()) {
        throw std::invalid_argument("pair_statistics: spectrum length mismatch");
    }
    if (bins < 2) {
        throw std::invalid_argument("pair_statistics: bins >= 2 required");
    }
    const double hi =
        std::max(spec_prev.size() > 0 ? spec_prev.cwiseAbs().maxCoeff() : 0.0,
                 spec_curr.size() > 0 ? spec_curr.cwiseAbs().maxCoeff() : 0.0);
    const std::vector<double> edges = log_edges(hi, bins);
    const int cells = bins + 1;
    const std::vector<double> mags_prev = sorted_magnitudes_desc(spec_prev);
    const std::vector<double> mags_curr = sorted_magnitudes_desc(spec_curr);
    std::vector<double> joint(cells * cells, 0.0);
    for (std::size_t r = 0; r < mags_prev.size(); ++r) {
        const int i = bin_index(mags_prev[r], edges);
        const int j = bin_index(mags_curr[r], edges);
        joint[i * cells + j] += 1.0;
    }
    std::vector<double> marg_prev(cells, 0.0), marg_curr(cells, 0.0);
    double total = 0.0;
    for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < cells; ++j) {
            marg_prev[i] += joint[i * cells + j];
            marg_curr[j] += joint[i * cells + j];
            total += joint[i * cells + j];
        }
    }
    PairStats stats;
    stats.entropy_prev = entropy_of_counts(marg_prev);
    stats.entropy_curr = entropy_of_counts(marg_curr);
    if (total <= 0.0) {
        return stats;
    }
    double mi = 0.0;
    for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < cells; ++j) {
            const double c = joint[i * cells + j];
            if (c > 0.0) {
                const double p = c / total;
                mi += p * std::log(p * total * total / (marg_prev[i] * marg_curr[j]));
            }
        }
    }
    stats.mi = std::max(mi, 0.0);
    return stats;
}

double mutual_information(const Eigen::VectorXd& spec_prev, const Eigen::VectorXd& spec_curr,
                          int bins) {
    return pair_statistics(spec_prev, spec_curr, bins).mi;
}

RiverValleySplit river_valley_split(const Eigen::VectorXd& spectrum, double eps) {
    if (eps <= 0.0) {
        throw std::invalid_argument("river_valley_split: eps must be positive");
    }
    RiverValleySplit split;
    split.epsilon = eps;
    for (int i = 0; i < spectrum.size(); ++i) {
        if (spectrum(i) <= eps) {
            split.river_indices.push_back(i);
        } else {
            split.valley_indices.push_back(i);
        }
    }
    return split;
}

ValleyClass classify_valley(const std::vector<double>& valley_eigs, double delta,
                            double kappa_v_threshold) {
    ValleyClass c;
    if (valley_eigs.empty()) {
        c.kappa = std::numeric_limits<double>::infinity();
        c.shape = ValleyShape::Indeterminate;
        return c;
    }
    const double vmax = *std::max_element(valley_eigs.begin(), valley_eigs.end());
    const double vmin = *std::min_element(valley_eigs.begin(), valley_eigs.end());
    if (vmin <= 0.0) {
        c.kappa = std::numeric_limits<double>::infinity();
        c.nonpositive_min = true;
        c.shape = ValleyShape::VShaped;
        return c;
    }
    c.kappa = vmax / vmin;
    if (c.kappa <= 1.0 + delta) {
        c.shape = ValleyShape::UShaped;
    } else if (c.kappa >= kappa_v_threshold) {
        c.shape = ValleyShape::VShaped;
    } else {
        c.shape = ValleyShape::Indeterminate;
    }
    return c;
}

Assumption1Check assumption1_check(const Eigen::VectorXd& spec_single,
                                   const Eigen::VectorXd& spec_looped, double tau) {
    if (tau <= 0.0) {
        throw std::invalid_argument("assumption1_check: tau must be positive");
    }
    Assumption1Check check;
    std::vector<double> s1(spec_single.data(), spec_single.data() + spec_single.size());
    std::vector<double> s2(spec_looped.data(), spec_looped.data() + spec_looped.size());
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    for (double v : s1) {
        check.m1 += v <= tau;
    }
    for (double v : s2) {
        check.m2 += v <= tau;
    }
    check.dominance = check.m1 > 0 && s2.size() >= static_cast<std::size_t>(check.m1);
    for (int i = 0; i < check.m1 && check.dominance; ++i) {
        check.dominance = s2[i] < s1[i];
    }
    return check;
}

SpectrumReport analyze_spectrum(int epoch, const std::string& block,
                                const Eigen::VectorXd& spectrum,
                                const Eigen::VectorXd* prev_spectrum, int bins,
                                double eps_rel, double delta, double kappa_v_threshold) {
    SpectrumReport report;
    report.epoch = epoch;
    report.block = block;
    report.eigenvalues = spectrum;
    report.entropy = matrix_entropy(spectrum, bins);
    if (prev_spectrum != nullptr) {
        report.mi_with_prev = mutual_information(*prev_spectrum, spectrum, bins);
    }
    const double lmax = spectrum.size() > 0 ? spectrum.maxCoeff() : 0.0;
    report.epsilon = lmax > 0.0 ? eps_rel * lmax : eps_rel;
    const RiverValleySplit split = river_valley_split(spectrum, report.epsilon);
    report.river_dim = static_cast<int>(split.river_indices.size());
    report.valley_dim = static_cast<int>(split.valley_indices.size());
    std::vector<double> valley;
    valley.reserve(split.valley_indices.size());
    for (int idx : split.valley_indices) {
        valley.push_back(spectrum(idx));
    }
    const ValleyClass c = classify_valley(valley, delta, kappa_v_threshold);
    report.kappa = c.kappa;
    report.shape = c.shape;
    return report;
}

void write_spectrum_csv(const std::vector<SpectrumReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "epoch,block,rank,eigenvalue\n";
    char buf[128];
    for (const SpectrumReport& r : reports) {
        for (int i = 0; i < r.eigenvalues.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.12e\n", r.epoch, r.block.c_str(), i,
                          r.eigenvalues(i));
            out << buf;
        }
    }
}

void write_spectrum_metrics_csv(const std::vector<SpectrumReport>& reports,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "epoch,block,entropy,mi,river_dim,valley_dim,kappa,shape\n";
    char buf[256];
    for (const SpectrumReport& r : reports) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%.12e,%.12e,%d,%d,%.12e,%s\n", r.epoch,
                      r.block.c_str(), r.entropy, r.mi_with_prev.value_or(0.0), r.river_dim,
                      r.valley_dim, r.kappa, shape_name(r.shape).c_str());
        out << buf;
    }
}

} // namespace llab
