#ifndef LLAB_ALIGNMENT_HPP
#define LLAB_ALIGNMENT_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "llab/models.hpp"

namespace llab {

struct Assumption3Draw {
    int dim = 0;
    // Default keeps the looped dynamics non-explosive (update gain ~ diag^3 *
    // ||E||^2 stays below one), which the alignment analysis relies on.
    std::pair<double, double> diag_range{0.05, 0.3};
    double eps_scale = 0.0;
    std::uint64_t seed = 0;
    ModelParams params;
    double min_diag = 0.0;
};

/// Diagonally dominant PSD-diagonal weights D + eps with the perturbation
/// spectral norm capped at eps_scale * (minimum diagonal entry).
Assumption3Draw sample_assumption3_params(int dim, std::pair<double, double> diag_range,
                                          double eps_scale, std::uint64_t seed,
                                          int vocab_size);

struct AlignmentResult {
    double inner_wk = 0.0; // Frobenius inner product of the two models'
    double inner_wq = 0.0; // direct-path gradients
};

/// <grad_single, grad_looped(T)> per block, using the paper's direct-path
/// (lemma) gradients.
AlignmentResult gradient_alignment(const ModelParams& params, const EmbeddingMap& emap,
                                   const Batch& batch, int loops);

/// Same inner products computed from grad_full gradients (beyond the
/// theorem's scope; reported for comparison).
AlignmentResult gradient_alignment_full(const ModelParams& params, const EmbeddingMap& emap,
                                        const Batch& batch, int loops);

struct AlignmentSweep {
    int draws = 0;
    int violations_wk = 0;
    int violations_wq = 0;
    double min_inner_wk = 0.0;
    double min_inner_wq = 0.0;
    std::vector<AlignmentResult> results;
    std::vector<bool> rank_ok;
};

/// Randomized Theorem-3 verification over Assumption-3 draws (or, with
/// adversarial=true, unconstrained Gaussian weights) on a fixed seeded batch.
AlignmentSweep alignment_sweep(int draws, int dim, int loops, double eps_scale,
                               std::uint64_t seed, bool adversarial = false,
                               double tolerance = -1e-8);

/// Delegates to the attention-models preconditioner op (Lemma 3 diagnostics).
PreconditionerReport verify_preconditioner(const ModelParams& params,
                                           const EmbeddingMap& emap, const Batch& batch,
                                           int loops);

void write_alignment_csv(const AlignmentSweep& sweep, const std::string& path);

} // namespace llab

#endif
