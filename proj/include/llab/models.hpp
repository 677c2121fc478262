#ifndef LLAB_MODELS_HPP
#define LLAB_MODELS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llab/markov.hpp"

namespace llab {

/// Fixed (non-trainable) token embedding with unit-norm columns.
struct EmbeddingMap {
    int vocab_size = 0;
    int dim = 0;
    Eigen::MatrixXd matrix; // d x V
    std::uint64_t seed = 0;
    bool positional = false; // additive fixed sinusoidal encoding at embed time
};

EmbeddingMap make_embedding(std::uint64_t seed, int vocab_size, int dim,
                            bool positional = false);

/// One linear-attention block plus the shared output head.
struct ModelParams {
    Eigen::MatrixXd w_k, w_q, w_v; // d x d
    Eigen::MatrixXd w_h;           // V x d
};

ModelParams random_params(std::uint64_t seed, int dim, int vocab_size,
                          double init_std = 0.02);

enum class ArchKind { Single, Looped, Deep };

struct Arch {
    ArchKind kind = ArchKind::Single;
    int depth = 1; // loop count T for Looped, layer count L for Deep

    static Arch single() { return {ArchKind::Single, 1}; }
    static Arch looped(int t) { return {ArchKind::Looped, t}; }
    static Arch deep(int layers) { return {ArchKind::Deep, layers}; }
};

std::string arch_tag(const Arch& arch);
Arch parse_arch(const std::string& tag);

/// Trainable state for any architecture: one block for Single/Looped, one per
/// layer for Deep. The head w_h lives in blocks[0]; Deep layers share it.
struct Model {
    Arch arch;
    std::vector<ModelParams> blocks;
};

Model random_model(const Arch& arch, std::uint64_t seed, int dim, int vocab_size,
                   double init_std = 0.02);

struct ForwardTrace {
    std::vector<Eigen::VectorXd> states;     // z_0 .. z_T
    std::vector<Eigen::MatrixXd> embeddings; // E_0 .. E_T (E fixed for Single)
    Eigen::VectorXd logits;                  // V
    Eigen::VectorXd probabilities;           // V, softmax of logits
};

std::pair<Eigen::MatrixXd, Eigen::VectorXd> embed(const EmbeddingMap& emap,
                                                  const std::vector<int>& tokens);

Eigen::VectorXd attention(const ModelParams& params, const Eigen::MatrixXd& e,
                          const Eigen::VectorXd& z);

ForwardTrace forward_single(const ModelParams& params, const EmbeddingMap& emap,
                            const std::vector<int>& tokens);

ForwardTrace forward_looped(const ModelParams& params, const EmbeddingMap& emap,
                            const std::vector<int>& tokens, int loops);

ForwardTrace forward_deep(const std::vector<ModelParams>& layers, const EmbeddingMap& emap,
                          const std::vector<int>& tokens);

ForwardTrace forward(const Model& model, const EmbeddingMap& emap,
                     const std::vector<int>& tokens);

double cross_entropy(const ForwardTrace& trace, int target);

/// Next-token batch: each item is an input context plus the target token.
struct Batch {
    std::vector<std::vector<int>> inputs;
    std::vector<int> targets;
};

/// Training view of a dataset: first L-1 tokens in, final token out.
Batch to_batch(const Dataset& dataset);

double batch_loss(const Model& model, const EmbeddingMap& emap, const Batch& batch);

/// Exact gradient of the mean cross-entropy loss, reverse mode through the
/// full recursion (including the dependence of E_t and z_t on the weights).
/// Same shape as model.blocks; sample contributions reduced sequentially.
std::vector<ModelParams> grad_full(const Model& model, const EmbeddingMap& emap,
                                   const Batch& batch);

enum class GradBlock { Wk, Wq };

/// Direct-path gradient: intermediate states treated as constants, i.e. the
/// per-loop Kronecker terms only. Equals grad_full for Single-Attn.
Eigen::MatrixXd grad_direct_path(const ModelParams& params, const EmbeddingMap& emap,
                                 const Batch& batch, const Arch& arch, GradBlock block);

struct PreconditionerReport {
    Eigen::MatrixXd p_wk; // d^2 x d^2
    Eigen::MatrixXd p_wq; // d^2 x d^2
    double residual_wk = 0.0;
    double residual_wq = 0.0;
    int rank_violations = 0; // samples where pinv(P1) P1 != I
    int sample_count = 0;
};

PreconditionerReport preconditioner(const ModelParams& params, const EmbeddingMap& emap,
                                    const Batch& batch, int loops);

// Flat parameter vector helpers (column-major per block, blocks in order
// w_k, w_q, w_v, w_h) used by finite differencing and the optimizer.
Eigen::VectorXd pack(const std::vector<ModelParams>& blocks);
void unpack(const Eigen::VectorXd& theta, std::vector<ModelParams>& blocks);

void write_checkpoint(const Model& model, const EmbeddingMap& emap, const std::string& path);
Model read_checkpoint(const std::string& path, EmbeddingMap& emap);

} // namespace llab

#endif
