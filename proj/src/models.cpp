#include "llab/models.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "llab/rng.hpp"

namespace llab {

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp();
    return p / p.sum();
}

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            m(i, j) = scale * rng.normal();
        }
    }
    return m;
}

} // namespace

EmbeddingMap make_embedding(std::uint64_t seed, int vocab_size, int dim, bool positional) {
    EmbeddingMap emap;
    emap.vocab_size = vocab_size;
    emap.dim = dim;
    emap.seed = seed;
    emap.positional = positional;
    Rng rng(derive_seed(seed, 0xe3bedd17));
    emap.matrix = gaussian_matrix(rng, dim, vocab_size, 1.0);
    for (int j = 0; j < vocab_size; ++j) {
        emap.matrix.col(j).normalize();
    }
    return emap;
}

ModelParams random_params(std::uint64_t seed, int dim, int vocab_size, double init_std) {
    Rng rng(seed);
    ModelParams p;
    p.w_k = gaussian_matrix(rng, dim, dim, init_std);
    p.w_q = gaussian_matrix(rng, dim, dim, init_std);
    p.w_v = gaussian_matrix(rng, dim, dim, init_std);
    p.w_h = gaussian_matrix(rng, vocab_size, dim, init_std);
    return p;
}

std::string arch_tag(const Arch& arch) {
    switch (arch.kind) {
        case ArchKind::Single: return "single";
        case ArchKind::Looped: return "looped:" + std::to_string(arch.depth);
        case ArchKind::Deep: return "deep:" + std::to_string(arch.depth);
    }
    return "single";
}

Arch parse_arch(const std::string& tag) {
    if (tag == "single") {
        return Arch::single();
    }
    const auto colon = tag.find(':');
    const std::string head = tag.substr(0, colon);
    const int depth = colon == std::string::npos ? 3 : std::stoi(tag.substr(colon + 1));
    if (head == "looped") {
        return Arch::looped(depth);
    }
    if (head == "deep") {
        return Arch::deep(depth);
    }
    throw std::invalid_argument("unknown architecture tag: " + tag);
}

Model random_model(const Arch& arch, std::uint64_t seed, int dim, int vocab_size,
                   double init_std) {
    if (arch.depth < 1) {
        throw std::invalid_argument("architecture depth must be >= 1");
    }
    Model m;
    m.arch = arch;
    const int blocks = arch.kind == ArchKind::Deep ? arch.depth : 1;
    for (int b = 0; b < blocks; ++b) {
        m.blocks.push_back(random_params(derive_seed(seed, b), dim, vocab_size, init_std));
    }
    // Deep layers share blocks[0].w_h; keep the others zero so the packed
    // parameter vector has no dead random entries.
    for (int b = 1; b < blocks; ++b) {
        m.blocks[b].w_h.setZero();
    }
    return m;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> embed(const EmbeddingMap& emap,
                                                  const std::vector<int>& tokens) {
    if (tokens.empty()) {
        throw std::invalid_argument("embed: empty token sequence");
    }
    const int n = static_cast<int>(tokens.size());
    Eigen::MatrixXd e(emap.dim, n);
    for (int i = 0; i < n; ++i) {
        if (tokens[i] < 0 || tokens[i] >= emap.vocab_size) {
            throw std::invalid_argument("embed: token id out of range");
        }
        e.col(i) = emap.matrix.col(tokens[i]);
    }
    if (emap.positional) {
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < emap.dim; ++k) {
                const double angle = i / std::pow(10000.0, 2.0 * (k / 2) / emap.dim);
                e(k, i) += (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
            }
        }
    }
    return {e, e.col(n - 1)};
}

Eigen::VectorXd attention(const ModelParams& params, const Eigen::MatrixXd& e,
                          const Eigen::VectorXd& z) {
    // W_V E E^T W_K^T W_Q z, evaluated right to left
    Eigen::VectorXd q = params.w_k.transpose() * (params.w_q * z);
    return params.w_v * (e * (e.transpose() * q));
}

namespace {

void finish_trace(ForwardTrace& trace, const Eigen::MatrixXd& w_h) {
    trace.logits = w_h * trace.states.back();
    trace.probabilities = softmax(trace.logits);
}

// One loop/layer update; updates z always, E only when update_embeddings.
void step(const ModelParams& p, Eigen::VectorXd& z, Eigen::MatrixXd& e,
          bool update_embeddings) {
    const Eigen::VectorXd z_new = z + attention(p, e, z);
    if (update_embeddings) {
        Eigen::MatrixXd g = p.w_k.transpose() * (p.w_q * e); // K E
        e = e + p.w_v * (e * (e.transpose() * g));
    }
    z = z_new;
}

} // namespace

ForwardTrace forward_single(const ModelParams& params, const EmbeddingMap& emap,
                            const std::vector<int>& tokens) {
    auto [e0, z0] = embed(emap, tokens);
    ForwardTrace trace;
    trace.embeddings.push_back(e0);
    trace.states.push_back(z0);
    Eigen::VectorXd z = z0;
    Eigen::MatrixXd e = e0;
    step(params, z, e, false);
    trace.states.push_back(z);
    finish_trace(trace, params.w_h);
    return trace;
}

ForwardTrace forward_looped(const ModelParams& params, const EmbeddingMap& emap,
                            const std::vector<int>& tokens, int loops) {
    if (loops < 1) {
        throw std::invalid_argument("forward_looped: loop count must be >= 1");
    }
    auto [e0, z0] = embed(emap, tokens);
    ForwardTrace trace;
    trace.embeddings.push_back(e0);
    trace.states.push_back(z0);
    Eigen::VectorXd z = z0;
    Eigen::MatrixXd e = e0;
    for (int t = 0; t < loops; ++t) {
        step(params, z, e, true);
        trace.states.push_back(z);
        trace.embeddings.push_back(e);
    }
    finish_trace(trace, params.w_h);
    return trace;
}

ForwardTrace forward_deep(const std::vector<ModelParams>& layers, const EmbeddingMap& emap,
                          const std::vector<int>& tokens) {
    if (layers.empty()) {
        throw std::invalid_argument("forward_deep: empty layer list");
    }
    auto [e0, z0] = embed(emap, tokens);
    ForwardTrace trace;
    trace.embeddings.push_back(e0);
    trace.states.push_back(z0);
    Eigen::VectorXd z = z0;
    Eigen::MatrixXd e = e0;
    for (const ModelParams& layer : layers) {
        step(layer, z, e, true);
        trace.states.push_back(z);
        trace.embeddings.push_back(e);
    }
    finish_trace(trace, layers.front().w_h);
    return trace;
}

ForwardTrace forward(const Model& model, const EmbeddingMap& emap,
                     const std::vector<int>& tokens) {
    switch (model.arch.kind) {
        case ArchKind::Single:
            return forward_single(model.blocks[0], emap, tokens);
        case ArchKind::Looped:
            return forward_looped(model.blocks[0], emap, tokens, model.arch.depth);
        case ArchKind::Deep:
            return forward_deep(model.blocks, emap, tokens);
    }
    throw std::logic_error("unreachable");
}

double cross_entropy(const ForwardTrace& trace, int target) {
    if (target < 0 || target >= trace.probabilities.size()) {
        throw std::invalid_argument("cross_entropy: target out of range");
    }
    return -std::log(trace.probabilities(target));
}

Batch to_batch(const Dataset& dataset) {
    Batch batch;
    batch.inputs.reserve(dataset.samples.size());
    batch.targets.reserve(dataset.samples.size());
    for (const Sample& s : dataset.samples) {
        if (s.tokens.size() < 2) {
            throw std::invalid_argument("to_batch: sequences need at least two tokens");
        }
        batch.inputs.emplace_back(s.tokens.begin(), s.tokens.end() - 1);
        batch.targets.push_back(s.tokens.back());
    }
    return batch;
}

double batch_loss(const Model& model, const EmbeddingMap& emap, const Batch& batch) {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
        total += cross_entropy(forward(model, emap, batch.inputs[i]), batch.targets[i]);
    }
    return total / static_cast<double>(batch.inputs.size());
}

namespace {

// Reverse-mode pass through one z/E update. gz and ge are the adjoints of
// z_t and E_t; on return they hold the adjoints of z_{t-1} and E_{t-1}, and
// the weight gradients are accumulated into grad.
void backward_step(const ModelParams& p, const Eigen::VectorXd& z, const Eigen::MatrixXd& e,
                   bool update_embeddings, Eigen::VectorXd& gz, Eigen::MatrixXd& ge,
                   ModelParams& grad) {
    const Eigen::MatrixXd ke = p.w_k.transpose() * (p.w_q * e); // K E, with K = Wk^T Wq

    // z_t = z + Wv E E^T K z
    const Eigen::VectorXd q = p.w_k.transpose() * (p.w_q * z); // K z
    const Eigen::VectorXd ew = e * (e.transpose() * q);        // E E^T K z
    const Eigen::VectorXd g = p.w_v.transpose() * gz;          // Wv^T gz
    const Eigen::VectorXd pvec = e * (e.transpose() * g);      // E E^T Wv^T gz
    grad.w_v.noalias() += gz * ew.transpose();
    grad.w_k.noalias() += (p.w_q * z) * pvec.transpose();
    grad.w_q.noalias() += (p.w_k * pvec) * z.transpose();

    Eigen::VectorXd gz_prev = gz + p.w_q.transpose() * (p.w_k * pvec);
    Eigen::MatrixXd ge_from_z =
        (g * q.transpose() + q * g.transpose()) * e; // (G q^T + q G^T) E

    if (update_embeddings) {
        // E_t = E + Wv E E^T K E
        const Eigen::MatrixXd a2 = e.transpose() * ke;  // E^T K E (n x n)
        const Eigen::MatrixXd e3 = e * a2;              // E E^T K E
        const Eigen::MatrixXd s = p.w_v.transpose() * ge; // Wv^T gE
        grad.w_v.noalias() += ge * e3.transpose();
        grad.w_k.noalias() += (p.w_q * e) * (s.transpose() * e) * e.transpose();
        grad.w_q.noalias() += p.w_k * (e * (e.transpose() * s)) * e.transpose();
        Eigen::MatrixXd ge_prev = ge;
        ge_prev.noalias() += s * a2.transpose();                               // G2 E^T K^T E
        ge_prev.noalias() += ke * (s.transpose() * e);                         // K E G2^T E
        ge_prev.noalias() += p.w_q.transpose() * (p.w_k * (e * (e.transpose() * s))); // K^T E E^T G2
        ge = ge_prev + ge_from_z;
    } else {
        ge += ge_from_z;
    }
    gz = gz_prev;
}

} // namespace

std::vector<ModelParams> grad_full(const Model& model, const EmbeddingMap& emap,
                                   const Batch& batch) {
    if (batch.inputs.empty()) {
        throw std::invalid_argument("grad_full: empty batch");
    }
    const int d = emap.dim;
    const int v = emap.vocab_size;
    std::vector<ModelParams> grads(model.blocks.size());
    for (ModelParams& g : grads) {
        g.w_k = Eigen::MatrixXd::Zero(d, d);
        g.w_q = Eigen::MatrixXd::Zero(d, d);
        g.w_v = Eigen::MatrixXd::Zero(d, d);
        g.w_h = Eigen::MatrixXd::Zero(v, d);
    }
    const bool update_embeddings = model.arch.kind != ArchKind::Single;
    const int steps = model.arch.kind == ArchKind::Single ? 1 : model.arch.depth;

    for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
        const ForwardTrace trace = forward(model, emap, batch.inputs[i]);
        Eigen::VectorXd dlogits = trace.probabilities;
        dlogits(batch.targets[i]) -= 1.0;

        grads[0].w_h.noalias() += dlogits * trace.states.back().transpose();
        const Eigen::MatrixXd& w_h = model.blocks[0].w_h;
        Eigen::VectorXd gz = w_h.transpose() * dlogits;
        Eigen::MatrixXd ge = Eigen::MatrixXd::Zero(d, trace.embeddings[0].cols());

        for (int t = steps; t >= 1; --t) {
            const int block = model.arch.kind == ArchKind::Deep ? t - 1 : 0;
            const Eigen::VectorXd& z_prev = trace.states[t - 1];
            const Eigen::MatrixXd& e_prev =
                update_embeddings ? trace.embeddings[t - 1] : trace.embeddings[0];
            backward_step(model.blocks[block], z_prev, e_prev, update_embeddings,
                          gz, ge, grads[block]);
        }
    }
    const double inv_n = 1.0 / static_cast<double>(batch.inputs.size());
    for (ModelParams& g : grads) {
        g.w_k *= inv_n;
        g.w_q *= inv_n;
        g.w_v *= inv_n;
        g.w_h *= inv_n;
    }
    return grads;
}

Eigen::MatrixXd grad_direct_path(const ModelParams& params, const EmbeddingMap& emap,
                                 const Batch& batch, const Arch& arch, GradBlock block) {
    if (arch.kind == ArchKind::Deep) {
        throw std::invalid_argument("grad_direct_path: defined for Single and Looped only");
    }
    const int d = emap.dim;
    const int loops = arch.kind == ArchKind::Single ? 1 : arch.depth;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
        const ForwardTrace trace = arch.kind == ArchKind::Single
            ? forward_single(params, emap, batch.inputs[i])
            : forward_looped(params, emap, batch.inputs[i], loops);
        Eigen::VectorXd dlogits = trace.probabilities;
        dlogits(batch.targets[i]) -= 1.0;
        const Eigen::VectorXd u = params.w_h.transpose() * dlogits;
        for (int t = 1; t <= loops; ++t) {
            const Eigen::MatrixXd& e_prev =
                arch.kind == ArchKind::Single ? trace.embeddings[0] : trace.embeddings[t - 1];
            const Eigen::VectorXd& z_prev = trace.states[t - 1];
            if (block == GradBlock::Wk) {
                // per-loop term b_{t-1} u^T A_{t-1}, A = Wv E E^T, b = Wq z
                const Eigen::VectorXd b = params.w_q * z_prev;
                const Eigen::VectorXd atu = e_prev * (e_prev.transpose() * (params.w_v.transpose() * u));
                grad.noalias() += b * atu.transpose();
            } else {
                // per-loop term (A~^T u) z^T, A~ = Wv E E^T Wk^T
                const Eigen::VectorXd atu =
                    params.w_k * (e_prev * (e_prev.transpose() * (params.w_v.transpose() * u)));
                grad.noalias() += atu * z_prev.transpose();
            }
        }
    }
    return grad / static_cast<double>(batch.inputs.size());
}

namespace {

// X (d x d) kron y (d x 1): column-major vec convention, so
// (X kron y) u == vec(y (X^T u)^T).
Eigen::MatrixXd kron_mat_vec(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const int d = static_cast<int>(y.size());
    Eigen::MatrixXd k(d * d, x.cols());
    for (int j = 0; j < x.rows(); ++j) {
        for (int m = 0; m < x.cols(); ++m) {
            k.block(j * d, m, d, 1) = x(j, m) * y;
        }
    }
    return k;
}

// y (d x 1) kron X (d x d)
Eigen::MatrixXd kron_vec_mat(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    const int d = static_cast<int>(y.size());
    Eigen::MatrixXd k(d * d, x.cols());
    for (int j = 0; j < d; ++j) {
        k.block(j * x.rows(), 0, x.rows(), x.cols()) = y(j) * x;
    }
    return k;
}

Eigen::VectorXd vec_cm(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

} // namespace

PreconditionerReport preconditioner(const ModelParams& params, const EmbeddingMap& emap,
                                    const Batch& batch, int loops) {
    if (loops < 1) {
        throw std::invalid_argument("preconditioner: loop count must be >= 1");
    }
    const int d = emap.dim;
    const int d2 = d * d;
    PreconditionerReport report;
    report.sample_count = static_cast<int>(batch.inputs.size());
    Eigen::MatrixXd acc_wk = Eigen::MatrixXd::Zero(d2, d2);
    Eigen::MatrixXd acc_wq = Eigen::MatrixXd::Zero(d2, d2);
    // Lemma-3 gradients share one error vector u = W_h^T(S(y_hat) - e_y) from
    // the looped forward pass: grad1 is the t=1 summand, grad2 the full sum.
    Eigen::MatrixXd g1_wk = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd g2_wk = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd g1_wq = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd g2_wq = Eigen::MatrixXd::Zero(d, d);

    for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
        const ForwardTrace trace = forward_looped(params, emap, batch.inputs[i], loops);
        Eigen::VectorXd dlogits = trace.probabilities;
        dlogits(batch.targets[i]) -= 1.0;
        const Eigen::VectorXd u = params.w_h.transpose() * dlogits;
        const Eigen::MatrixXd& e0 = trace.embeddings[0];
        const Eigen::VectorXd& z0 = trace.states[0];
        const Eigen::MatrixXd m0 = e0 * e0.transpose();
        const Eigen::MatrixXd a = params.w_v * m0;
        const Eigen::VectorXd b = params.w_q * z0;
        const Eigen::MatrixXd a_tilde = a * params.w_k.transpose();

        const Eigen::MatrixXd p1 = kron_mat_vec(a.transpose(), b);
        const Eigen::MatrixXd p1_tilde = kron_vec_mat(z0, a_tilde.transpose());

        Eigen::MatrixXd p2 = Eigen::MatrixXd::Zero(d2, d);
        Eigen::MatrixXd p2_tilde = Eigen::MatrixXd::Zero(d2, d);
        g1_wk.noalias() += b * (a.transpose() * u).transpose();
        g2_wk.noalias() += b * (a.transpose() * u).transpose();
        g1_wq.noalias() += (a_tilde.transpose() * u) * z0.transpose();
        g2_wq.noalias() += (a_tilde.transpose() * u) * z0.transpose();
        for (int t = 2; t <= loops; ++t) {
            const Eigen::MatrixXd& e_prev = trace.embeddings[t - 1];
            const Eigen::VectorXd& z_prev = trace.states[t - 1];
            const Eigen::MatrixXd a_t = params.w_v * (e_prev * e_prev.transpose());
            const Eigen::VectorXd b_t = params.w_q * z_prev;
            const Eigen::MatrixXd a_tilde_t = a_t * params.w_k.transpose();
            p2 += kron_mat_vec(a_t.transpose(), b_t);
            p2_tilde += kron_vec_mat(z_prev, params.w_k * a_t.transpose());
            g2_wk.noalias() += b_t * (a_t.transpose() * u).transpose();
            g2_wq.noalias() += (a_tilde_t.transpose() * u) * z_prev.transpose();
        }

        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(p1);
        const Eigen::MatrixXd p1_pinv = cod.pseudoInverse();
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_t(p1_tilde);
        const Eigen::MatrixXd p1_tilde_pinv = cod_t.pseudoInverse();

        const bool rank_ok =
            (p1_pinv * p1 - Eigen::MatrixXd::Identity(d, d)).norm() < 1e-8 &&
            (p1_tilde_pinv * p1_tilde - Eigen::MatrixXd::Identity(d, d)).norm() < 1e-8;
        if (!rank_ok) {
            ++report.rank_violations;
        }
        acc_wk += p2 * p1_pinv;
        acc_wq += p2_tilde * p1_tilde_pinv;
    }
    const double inv_n = 1.0 / static_cast<double>(batch.inputs.size());
    report.p_wk = Eigen::MatrixXd::Identity(d2, d2) + acc_wk * inv_n;
    report.p_wq = Eigen::MatrixXd::Identity(d2, d2) + acc_wq * inv_n;

    g1_wk *= inv_n;
    g2_wk *= inv_n;
    g1_wq *= inv_n;
    g2_wq *= inv_n;
    report.residual_wk = (vec_cm(g2_wk) - report.p_wk * vec_cm(g1_wk)).norm();
    report.residual_wq = (vec_cm(g2_wq) - report.p_wq * vec_cm(g1_wq)).norm();
    return report;
}

Eigen::VectorXd pack(const std::vector<ModelParams>& blocks) {
    std::size_t total = 0;
    for (const ModelParams& b : blocks) {
        total += b.w_k.size() + b.w_q.size() + b.w_v.size() + b.w_h.size();
    }
    Eigen::VectorXd theta(total);
    std::size_t off = 0;
    auto put = [&](const Eigen::MatrixXd& m) {
        theta.segment(off, m.size()) = vec_cm(m);
        off += m.size();
    };
    for (const ModelParams& b : blocks) {
        put(b.w_k);
        put(b.w_q);
        put(b.w_v);
        put(b.w_h);
    }
    return theta;
}

void unpack(const Eigen::VectorXd& theta, std::vector<ModelParams>& blocks) {
    std::size_t off = 0;
    auto take = [&](Eigen::MatrixXd& m) {
        m = Eigen::Map<const Eigen::MatrixXd>(theta.data() + off, m.rows(), m.cols());
        off += m.size();
    };
    for (ModelParams& b : blocks) {
        take(b.w_k);
        take(b.w_q);
        take(b.w_v);
        take(b.w_h);
    }
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        std::vector<double> row(m.cols());
        for (int j = 0; j < m.cols(); ++j) {
            row[j] = m(i, j);
        }
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = static_cast<int>(rows.at(0).size());
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            m(i, j) = rows.at(i).at(j).get<double>();
        }
    }
    return m;
}

} // namespace

void write_checkpoint(const Model& model, const EmbeddingMap& emap, const std::string& path) {
    nlohmann::json j;
    j["arch"] = arch_tag(model.arch);
    j["dim"] = emap.dim;
    j["vocab_size"] = emap.vocab_size;
    j["embedding_seed"] = emap.seed;
    j["positional"] = emap.positional;
    nlohmann::json blocks = nlohmann::json::array();
    for (const ModelParams& b : model.blocks) {
        nlohmann::json jb;
        jb["w_k"] = matrix_to_json(b.w_k);
        jb["w_q"] = matrix_to_json(b.w_q);
        jb["w_v"] = matrix_to_json(b.w_v);
        jb["w_h"] = matrix_to_json(b.w_h);
        blocks.push_back(jb);
    }
    j["blocks"] = blocks;
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << j.dump() << "\n";
}

Model read_checkpoint(const std::string& path, EmbeddingMap& emap) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    nlohmann::json j;
    in >> j;
    emap = make_embedding(j.at("embedding_seed").get<std::uint64_t>(),
                          j.at("vocab_size").get<int>(), j.at("dim").get<int>(),
                          j.value("positional", false));
    Model model;
    model.arch = parse_arch(j.at("arch").get<std::string>());
    for (const auto& jb : j.at("blocks")) {
        ModelParams b;
        b.w_k = matrix_from_json(jb.at("w_k"));
        b.w_q = matrix_from_json(jb.at("w_q"));
        b.w_v = matrix_from_json(jb.at("w_v"));
        b.w_h = matrix_from_json(jb.at("w_h"));
        model.blocks.push_back(std::move(b));
    }
    return model;
}

} // namespace llab
