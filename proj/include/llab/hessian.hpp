#ifndef LLAB_HESSIAN_HPP
#define LLAB_HESSIAN_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llab/models.hpp"

namespace llab {

enum class HessBlock { Wv, Wk };

std::string hess_block_name(HessBlock block);

/// Gradient of a scalar loss with respect to a flat parameter vector; the
/// generic entry point lets tests inject analytic surrogates (e.g. quadratics).
using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central finite difference of grad along each basis direction with step
/// h_rel * max(1, ||theta||_inf), symmetrized as (H + H^T)/2.
Eigen::MatrixXd hessian_fd(const GradFn& grad, const Eigen::VectorXd& theta0,
                           double h_rel = 1e-3);

/// Block Hessian of the empirical loss w.r.t. one weight matrix of blocks[0],
/// other blocks held fixed (block-diagonal restriction).
Eigen::MatrixXd hessian_block(const Model& model, const EmbeddingMap& emap,
                              const Batch& batch, HessBlock block, double h_rel = 1e-3);

/// Real eigenvalues of a symmetric matrix, sorted descending.
Eigen::VectorXd eigenspectrum(const Eigen::MatrixXd& h);

/// Entropy (nats) of the |lambda| histogram over `bins` log-spaced bins on
/// [1e-8, max|lambda|] plus one underflow bin.
double matrix_entropy(const Eigen::VectorXd& spectrum, int bins = 30);

struct PairStats {
    double mi = 0.0;
    double entropy_prev = 0.0; // marginal entropies under the shared edge set
    double entropy_curr = 0.0;
};

/// MI between consecutive spectra: eigenvalues paired by descending-magnitude
/// rank, joint histogram over a shared log-spaced edge set spanning both.
PairStats pair_statistics(const Eigen::VectorXd& spec_prev, const Eigen::VectorXd& spec_curr,
                          int bins = 30);

double mutual_information(const Eigen::VectorXd& spec_prev, const Eigen::VectorXd& spec_curr,
                          int bins = 30);

struct RiverValleySplit {
    double epsilon = 0.0;
    std::vector<int> river_indices;  // lambda <= eps
    std::vector<int> valley_indices; // lambda > eps
};

RiverValleySplit river_valley_split(const Eigen::VectorXd& spectrum, double eps);

enum class ValleyShape { UShaped, VShaped, Indeterminate };

std::string shape_name(ValleyShape s);

struct ValleyClass {
    ValleyShape shape = ValleyShape::Indeterminate;
    double kappa = 0.0; // infinity when the valley is empty or lambda_min <= 0
    bool nonpositive_min = false;
};

ValleyClass classify_valley(const std::vector<double>& valley_eigs, double delta = 0.5,
                            double kappa_v_threshold = 10.0);

struct Assumption1Check {
    int m1 = 0;
    int m2 = 0;
    bool dominance = false;
};

/// m_k = #{lambda <= tau}; dominance iff ascending-sorted looped eigenvalues
/// are strictly below single's for the first m1 entries.
Assumption1Check assumption1_check(const Eigen::VectorXd& spec_single,
                                   const Eigen::VectorXd& spec_looped, double tau = 0.5);

struct SpectrumReport {
    int epoch = 0;
    std::string block;
    Eigen::VectorXd eigenvalues; // sorted descending
    double entropy = 0.0;
    std::optional<double> mi_with_prev;
    int river_dim = 0;
    int valley_dim = 0;
    double epsilon = 0.0;
    double kappa = 0.0;
    ValleyShape shape = ValleyShape::Indeterminate;
};

SpectrumReport analyze_spectrum(int epoch, const std::string& block,
                                const Eigen::VectorXd& spectrum,
                                const Eigen::VectorXd* prev_spectrum, int bins = 30,
                                double eps_rel = 0.05, double delta = 0.5,
                                double kappa_v_threshold = 10.0);

void write_spectrum_csv(const std::vector<SpectrumReport>& reports, const std::string& path);
void write_spectrum_metrics_csv(const std::vector<SpectrumReport>& reports,
                                const std::string& path);

} // namespace llab

#endif
