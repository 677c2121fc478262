#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "llab/markov.hpp"
#include "llab/models.hpp"
#include "llab/rng.hpp"

using namespace llab;

namespace {

Batch random_batch(std::uint64_t seed, int vocab, int length, int count) {
    Rng rng(seed);
    Batch batch;
    for (int i = 0; i < count; ++i) {
        std::vector<int> tokens(length);
        for (int& t : tokens) {
            t = static_cast<int>(rng.uniform01() * vocab) % vocab;
        }
        batch.inputs.emplace_back(tokens.begin(), tokens.end() - 1);
        batch.targets.push_back(tokens.back());
    }
    return batch;
}

Model random_test_model(const Arch& arch, std::uint64_t seed, int dim, int vocab,
                        double std_dev = 0.3) {
    return random_model(arch, seed, dim, vocab, std_dev);
}

// Central finite difference of the batch loss over the packed parameters.
Eigen::VectorXd fd_gradient(const Model& model, const EmbeddingMap& emap, const Batch& batch,
                            double h = 1e-5) {
    Model work = model;
    Eigen::VectorXd theta0 = pack(model.blocks);
    Eigen::VectorXd grad(theta0.size());
    for (int i = 0; i < theta0.size(); ++i) {
        Eigen::VectorXd theta = theta0;
        theta(i) = theta0(i) + h;
        unpack(theta, work.blocks);
        const double lp = batch_loss(work, emap, batch);
        theta(i) = theta0(i) - h;
        unpack(theta, work.blocks);
        const double lm = batch_loss(work, emap, batch);
        grad(i) = (lp - lm) / (2.0 * h);
    }
    return grad;
}

double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-8});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

} // namespace

TEST_CASE("embedding columns are unit norm and deterministic") {
    const EmbeddingMap a = make_embedding(0, 3, 8);
    const EmbeddingMap b = make_embedding(0, 3, 8);
    for (int j = 0; j < 3; ++j) {
        CHECK(a.matrix.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK((a.matrix - b.matrix).norm() == 0.0);
    const EmbeddingMap c = make_embedding(1, 3, 8);
    CHECK((a.matrix - c.matrix).norm() > 0.0);
}

TEST_CASE("embed maps tokens to columns; last column is z0") {
    const EmbeddingMap emap = make_embedding(7, 3, 4);
    auto [e, z] = embed(emap, {1});
    CHECK(e.cols() == 1);
    CHECK((e.col(0) - z).norm() == 0.0);
    auto [e2, z2] = embed(emap, {2, 2, 2});
    CHECK((e2.col(0) - e2.col(2)).norm() == 0.0);
    CHECK((e2.col(2) - z2).norm() == 0.0);
    CHECK_THROWS_AS((void)embed(emap, {0, 5}), std::invalid_argument);
    CHECK_THROWS_AS((void)embed(emap, {}), std::invalid_argument);
}

TEST_CASE("attention is the exact product and linear in z") {
    const int d = 5;
    ModelParams p = random_params(3, d, 3, 0.5);
    const EmbeddingMap emap = make_embedding(3, 3, d);
    auto [e, z] = embed(emap, {0, 1, 2});

    CHECK(attention(p, e, Eigen::VectorXd::Zero(d)).norm() == 0.0);
    ModelParams zero = p;
    zero.w_v.setZero();
    CHECK(attention(zero, e, z).norm() == 0.0);

    // identity weights, single-column E equal to z: output = (z^T z) z
    ModelParams ident;
    ident.w_k = ident.w_q = ident.w_v = Eigen::MatrixXd::Identity(d, d);
    ident.w_h = Eigen::MatrixXd::Zero(3, d);
    Eigen::MatrixXd ez = z;
    CHECK((attention(ident, ez, z) - z.dot(z) * z).norm() < 1e-14);

    // linearity in z
    const Eigen::VectorXd a1 = attention(p, e, z);
    const Eigen::VectorXd a2 = attention(p, e, (2.5 * z).eval());
    CHECK((a2 - 2.5 * a1).norm() < 1e-12);
}

TEST_CASE("forward_single equals forward_looped at T=1 bit for bit") {
    const EmbeddingMap emap = make_embedding(11, 3, 6);
    const ModelParams p = random_params(5, 6, 3, 0.4);
    const std::vector<int> tokens{0, 2, 1};
    const ForwardTrace a = forward_single(p, emap, tokens);
    const ForwardTrace b = forward_looped(p, emap, tokens, 1);
    CHECK((a.logits - b.logits).norm() == 0.0);
    CHECK(a.states.size() == 2);
    CHECK(a.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero weights give uniform probabilities and frozen states") {
    const EmbeddingMap emap = make_embedding(1, 3, 4);
    ModelParams p;
    p.w_k = p.w_q = p.w_v = Eigen::MatrixXd::Zero(4, 4);
    p.w_h = Eigen::MatrixXd::Zero(3, 4);
    const ForwardTrace t = forward_looped(p, emap, {0, 1, 2}, 4);
    CHECK((t.states.back() - t.states.front()).norm() == 0.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(t.probabilities(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    CHECK(cross_entropy(t, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("looped forward matches a hand-unrolled recursion oracle (d=2, n=2, T=2)") {
    const int d = 2;
    const EmbeddingMap emap = make_embedding(13, 3, d);
    const ModelParams p = random_params(17, d, 3, 0.6);
    const std::vector<int> tokens{1, 2};
    auto [e0, z0] = embed(emap, tokens);

    Eigen::MatrixXd e = e0;
    Eigen::VectorXd z = z0;
    for (int t = 0; t < 2; ++t) {
        const Eigen::VectorXd z_new =
            z + p.w_v * e * e.transpose() * p.w_k.transpose() * p.w_q * z;
        const Eigen::MatrixXd e_new =
            e + p.w_v * e * e.transpose() * p.w_k.transpose() * p.w_q * e;
        z = z_new;
        e = e_new;
    }
    const Eigen::VectorXd logits = p.w_h * z;
    const ForwardTrace trace = forward_looped(p, emap, tokens, 2);
    CHECK((trace.logits - logits).norm() < 1e-12);
    CHECK((trace.states.back() - z).norm() < 1e-12);
    CHECK((trace.embeddings.back() - e).norm() < 1e-12);
}

TEST_CASE("deep with shared weights reproduces looped") {
    const EmbeddingMap emap = make_embedding(23, 3, 5);
    const ModelParams p = random_params(29, 5, 3, 0.4);
    const std::vector<ModelParams> layers{p, p, p};
    const ForwardTrace deep = forward_deep(layers, emap, {0, 1, 2});
    const ForwardTrace looped = forward_looped(p, emap, {0, 1, 2}, 3);
    CHECK((deep.logits - looped.logits).norm() < 1e-12);
    const ForwardTrace one = forward_deep({p}, emap, {0, 1, 2});
    CHECK((one.logits - forward_looped(p, emap, {0, 1, 2}, 1).logits).norm() == 0.0);
}

TEST_CASE("grad_full matches central finite differences for all architectures") {
    int instance = 0;
    for (const int d : {2, 4, 8}) {
        for (int rep = 0; rep < 3; ++rep) {
            const EmbeddingMap emap = make_embedding(100 + instance, 3, d);
            const Batch batch = random_batch(200 + instance, 3, 4, 5);
            const std::vector<Arch> archs{Arch::single(), Arch::looped(3), Arch::deep(3)};
            for (const Arch& arch : archs) {
                const Model model = random_test_model(arch, 300 + instance, d, 3);
                const std::vector<ModelParams> g = grad_full(model, emap, batch);
                const Eigen::VectorXd analytic = pack(g);
                const Eigen::VectorXd numeric = fd_gradient(model, emap, batch);
                CHECK(max_rel_error(analytic, numeric) <= 1e-6);
            }
            ++instance;
        }
    }
}

TEST_CASE("gradient vanishes when probabilities are one-hot at the target") {
    // w_h scaled very large with a dominant correct logit saturates softmax
    const int d = 4;
    const EmbeddingMap emap = make_embedding(5, 3, d);
    Model model = random_test_model(Arch::single(), 6, d, 3, 0.0);
    // zero attention weights: z1 = z0; craft w_h so target logit dominates
    Batch batch;
    batch.inputs.push_back({0, 1, 2});
    batch.targets.push_back(1);
    auto [e0, z0] = embed(emap, batch.inputs[0]);
    model.blocks[0].w_h.setZero();
    model.blocks[0].w_h.row(1) = 1e4 * z0.transpose();
    const std::vector<ModelParams> g = grad_full(model, emap, batch);
    CHECK(pack(g).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("direct-path gradient equals grad_full for Single-Attn") {
    const int d = 5;
    const EmbeddingMap emap = make_embedding(31, 3, d);
    const Batch batch = random_batch(37, 3, 4, 6);
    const Model model = random_test_model(Arch::single(), 41, d, 3);
    const std::vector<ModelParams> full = grad_full(model, emap, batch);
    const Eigen::MatrixXd wk =
        grad_direct_path(model.blocks[0], emap, batch, Arch::single(), GradBlock::Wk);
    const Eigen::MatrixXd wq =
        grad_direct_path(model.blocks[0], emap, batch, Arch::single(), GradBlock::Wq);
    CHECK((wk - full[0].w_k).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((wq - full[0].w_q).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Lemma-1 Kronecker form reshapes to b u^T A under column-major vec") {
    const int d = 4;
    const EmbeddingMap emap = make_embedding(43, 3, d);
    Batch batch;
    batch.inputs.push_back({2, 0, 1});
    batch.targets.push_back(0);
    const ModelParams p = random_params(47, d, 3, 0.5);

    const ForwardTrace trace = forward_single(p, emap, batch.inputs[0]);
    Eigen::VectorXd dlogits = trace.probabilities;
    dlogits(batch.targets[0]) -= 1.0;
    const Eigen::VectorXd u = p.w_h.transpose() * dlogits;
    auto [e0, z0] = embed(emap, batch.inputs[0]);
    const Eigen::MatrixXd a = p.w_v * e0 * e0.transpose();
    const Eigen::VectorXd b = p.w_q * z0;

    // independent Kronecker evaluation: (A^T kron b) u, column-major reshape
    Eigen::VectorXd vec_grad = Eigen::VectorXd::Zero(d * d);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int m = 0; m < d; ++m) {
                s += a.transpose()(j, m) * b(i) * u(m);
            }
            vec_grad(j * d + i) = s;
        }
    }
    const Eigen::MatrixXd expected =
        Eigen::Map<const Eigen::MatrixXd>(vec_grad.data(), d, d);
    const Eigen::MatrixXd direct =
        grad_direct_path(p, emap, batch, Arch::single(), GradBlock::Wk);
    CHECK((direct - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((direct - b * u.transpose() * a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("direct-path gradient at T=1 equals the Single-Attn direct path") {
    const int d = 4;
    const EmbeddingMap emap = make_embedding(53, 3, d);
    const Batch batch = random_batch(59, 3, 4, 4);
    const ModelParams p = random_params(61, d, 3, 0.5);
    for (const GradBlock block : {GradBlock::Wk, GradBlock::Wq}) {
        const Eigen::MatrixXd g1 = grad_direct_path(p, emap, batch, Arch::single(), block);
        const Eigen::MatrixXd gl = grad_direct_path(p, emap, batch, Arch::looped(1), block);
        CHECK((g1 - gl).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("preconditioner is the identity at T=1 with zero residual") {
    const int d = 3;
    const EmbeddingMap emap = make_embedding(67, 3, d);
    const Batch batch = random_batch(71, 3, 4, 3);
    const ModelParams p = random_params(73, d, 3, 0.5);
    const PreconditionerReport report = preconditioner(p, emap, batch, 1);
    CHECK((report.p_wk - Eigen::MatrixXd::Identity(d * d, d * d)).norm() < 1e-12);
    CHECK((report.p_wq - Eigen::MatrixXd::Identity(d * d, d * d)).norm() < 1e-12);
    CHECK(report.residual_wk < 1e-12);
    CHECK(report.residual_wq < 1e-12);
}

TEST_CASE("preconditioner identity holds per sample on full-rank instances") {
    // rank(A) = d requires d distinct embedding columns: d = 3 with all three
    // vocabulary tokens present
    const int d = 3;
    const EmbeddingMap emap = make_embedding(79, 3, d);
    Batch batch;
    batch.inputs.push_back({0, 1, 2});
    batch.targets.push_back(2);
    const ModelParams p = random_params(83, d, 3, 0.6);
    const PreconditionerReport report = preconditioner(p, emap, batch, 3);
    CHECK(report.rank_violations == 0);
    CHECK(report.residual_wk <= 1e-8);
    CHECK(report.residual_wq <= 1e-8);
}

TEST_CASE("preconditioner flags rank-deficient instances") {
    const int d = 4;
    const EmbeddingMap emap = make_embedding(89, 3, d);
    Batch batch;
    batch.inputs.push_back({0, 1, 2});
    batch.targets.push_back(0);
    ModelParams p = random_params(97, d, 3, 0.5);
    p.w_v.setZero(); // A = 0: rank precondition fails
    const PreconditionerReport report = preconditioner(p, emap, batch, 3);
    CHECK(report.rank_violations == 1);
    const int d2 = d * d;
    CHECK((report.p_wk - Eigen::MatrixXd::Identity(d2, d2)).norm() < 1e-12);
}

TEST_CASE("pack/unpack round trip and checkpoint IO") {
    const Model model = random_test_model(Arch::deep(2), 101, 3, 3);
    const Eigen::VectorXd theta = pack(model.blocks);
    Model copy = model;
    for (ModelParams& b : copy.blocks) {
        b.w_k.setZero();
        b.w_q.setZero();
        b.w_v.setZero();
        b.w_h.setZero();
    }
    unpack(theta, copy.blocks);
    CHECK((pack(copy.blocks) - theta).norm() == 0.0);

    const EmbeddingMap emap = make_embedding(103, 3, 3);
    const std::string path = "checkpoint_test.json";
    write_checkpoint(model, emap, path);
    EmbeddingMap emap2;
    const Model loaded = read_checkpoint(path, emap2);
    CHECK(arch_tag(loaded.arch) == arch_tag(model.arch));
    CHECK((pack(loaded.blocks) - theta).norm() == 0.0);
    CHECK((emap2.matrix - emap.matrix).norm() == 0.0);
}

TEST_CASE("arch tags round trip") {
    CHECK(arch_tag(parse_arch("single")) == "single");
    CHECK(arch_tag(parse_arch("looped:3")) == "looped:3");
    CHECK(arch_tag(parse_arch("deep:4")) == "deep:4");
    CHECK_THROWS_AS((void)parse_arch("mystery"), std::invalid_argument);
}
