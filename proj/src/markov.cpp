#include "llab/markov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "llab/rng.hpp"

namespace llab {

namespace {

std::uint64_t ipow(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) {
        r *= base;
    }
    return r;
}

std::vector<int> decode_sequence(std::uint64_t code, int vocab, int length) {
    // Big-endian digits so code order equals lexicographic token order.
    std::vector<int> tokens(length);
    for (int i = length - 1; i >= 0; --i) {
        tokens[i] = static_cast<int>(code % vocab);
        code /= vocab;
    }
    return tokens;
}

bool tokens_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

std::string stratum_name(Stratum s) {
    switch (s) {
        case Stratum::Low: return "low";
        case Stratum::Mid: return "mid";
        case Stratum::High: return "high";
    }
    return "mid";
}

TransitionModel build_transition_model(std::uint64_t seed, int vocab_size, int num_matrices) {
    if (vocab_size < 2) {
        throw std::invalid_argument("build_transition_model: vocab_size must be >= 2");
    }
    if (num_matrices < 1) {
        throw std::invalid_argument("build_transition_model: num_matrices must be >= 1");
    }
    TransitionModel model;
    model.vocab_size = vocab_size;
    model.seed = seed;
    model.initial = Eigen::VectorXd::Constant(vocab_size, 1.0 / vocab_size);

    Rng rng(seed);
    model.transitions.reserve(num_matrices);
    for (int m = 0; m < num_matrices; ++m) {
        Eigen::MatrixXd t(vocab_size, vocab_size);
        for (int i = 0; i < vocab_size; ++i) {
            // Dirichlet(1) row via normalized exponentials, floored at 1e-4
            // so every sequence keeps finite information content.
            double sum = 0.0;
            for (int j = 0; j < vocab_size; ++j) {
                t(i, j) = rng.exponential();
                sum += t(i, j);
            }
            t.row(i) /= sum;
            for (int j = 0; j < vocab_size; ++j) {
                t(i, j) = std::max(t(i, j), 1e-4);
            }
            t.row(i) /= t.row(i).sum();
        }
        model.transitions.push_back(std::move(t));
    }
    return model;
}

double sequence_probability(const TransitionModel& model, const std::vector<int>& tokens) {
    if (tokens.empty()) {
        throw std::invalid_argument("sequence_probability: empty token sequence");
    }
    const int v = model.vocab_size;
    for (int tok : tokens) {
        if (tok < 0 || tok >= v) {
            throw std::invalid_argument("sequence_probability: token id out of range");
        }
    }
    const int m = static_cast<int>(model.transitions.size());
    double p = model.initial(tokens[0]);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
        const int matrix_index = static_cast<int>((t - 1) % m);
        p *= model.transitions[matrix_index](tokens[t - 1], tokens[t]);
    }
    return p;
}

double information_content(double probability) {
    if (probability <= 0.0) {
        throw std::domain_error("information_content: probability must be positive");
    }
    return -std::log(probability);
}

namespace {

struct Candidate {
    std::vector<int> tokens;
    double probability;
};

/// All V^L sequences in lexicographic order with exact probabilities.
std::vector<Candidate> enumerate_candidates(const TransitionModel& model, int length) {
    const std::uint64_t count = ipow(model.vocab_size, length);
    std::vector<Candidate> out;
    out.reserve(count);
    for (std::uint64_t code = 0; code < count; ++code) {
        Candidate c;
        c.tokens = decode_sequence(code, model.vocab_size, length);
        c.probability = sequence_probability(model, c.tokens);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<int> ancestral_draw(const TransitionModel& model, int length, Rng& rng) {
    const int v = model.vocab_size;
    const int m = static_cast<int>(model.transitions.size());
    std::vector<int> tokens(length);
    std::vector<double> cum(v);
    double acc = 0.0;
    for (int j = 0; j < v; ++j) {
        acc += model.initial(j);
        cum[j] = acc;
    }
    tokens[0] = rng.from_cumulative(cum);
    for (int t = 1; t < length; ++t) {
        const Eigen::MatrixXd& tr = model.transitions[(t - 1) % m];
        acc = 0.0;
        for (int j = 0; j < v; ++j) {
            acc += tr(tokens[t - 1], j);
            cum[j] = acc;
        }
        tokens[t] = rng.from_cumulative(cum);
    }
    return tokens;
}

Dataset sample_common(const TransitionModel& model, int n_samples, int length,
                      double power, std::uint64_t seed) {
    if (n_samples < 1) {
        throw std::invalid_argument("sample_dataset: sample count must be >= 1");
    }
    if (length < 1) {
        throw std::invalid_argument("sample_dataset: length must be >= 1");
    }
    if (power < 0.0) {
        throw std::invalid_argument("sample_dataset: power must be >= 0");
    }

    Dataset ds;
    ds.source_model = model;
    ds.length = length;
    ds.sampling_power = power;
    ds.samples.reserve(n_samples);

    Rng rng(seed);
    const double space = std::pow(static_cast<double>(model.vocab_size), length);
    if (space <= static_cast<double>(kEnumerationCap)) {
        std::vector<Candidate> candidates = enumerate_candidates(model, length);
        std::vector<double> cum(candidates.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            acc += std::pow(candidates[i].probability, power);
            cum[i] = acc;
        }
        for (int i = 0; i < n_samples; ++i) {
            const Candidate& c = candidates[rng.from_cumulative(cum)];
            Sample s;
            s.tokens = c.tokens;
            s.probability = c.probability;
            s.ic = information_content(c.probability);
            ds.samples.push_back(std::move(s));
        }
    } else {
        // Ancestral draws arrive with weight P(X); self-normalized importance
        // resampling with weight P(X)^(power-1) recovers the P^power law.
        const int pool_size = std::max(n_samples * 20, 100000);
        std::vector<Candidate> pool;
        pool.reserve(pool_size);
        std::vector<double> cum(pool_size);
        double acc = 0.0;
        for (int i = 0; i < pool_size; ++i) {
            Candidate c;
            c.tokens = ancestral_draw(model, length, rng);
            c.probability = sequence_probability(model, c.tokens);
            acc += std::pow(c.probability, power - 1.0);
            cum[i] = acc;
            pool.push_back(std::move(c));
        }
        for (int i = 0; i < n_samples; ++i) {
            const Candidate& c = pool[rng.from_cumulative(cum)];
            Sample s;
            s.tokens = c.tokens;
            s.probability = c.probability;
            s.ic = information_content(c.probability);
            ds.samples.push_back(std::move(s));
        }
    }
    stratify(ds);
    return ds;
}

} // namespace

Dataset sample_dataset(const TransitionModel& model, int n_samples, int length,
                       double power, std::uint64_t seed) {
    const double space = std::pow(static_cast<double>(model.vocab_size), length);
    if (space > static_cast<double>(kEnumerationCap)) {
        throw std::runtime_error("sample_dataset: V^L exceeds the enumeration cap");
    }
    return sample_common(model, n_samples, length, power, seed);
}

void stratify(Dataset& dataset, double low_frac, double high_frac) {
    if (dataset.samples.empty()) {
        throw std::invalid_argument("stratify: empty dataset");
    }
    if (low_frac <= 0.0 || high_frac <= 0.0 || low_frac + high_frac > 1.0) {
        throw std::invalid_argument("stratify: fractions must be positive and sum to at most 1");
    }
    // Canonical sort: IC ascending, ties by lexicographic token order.
    std::sort(dataset.samples.begin(), dataset.samples.end(),
              [](const Sample& a, const Sample& b) {
                  if (a.ic != b.ic) {
                      return a.ic < b.ic;
                  }
                  return tokens_less(a.tokens, b.tokens);
              });
    const std::size_t n = dataset.samples.size();
    const std::size_t n_low = static_cast<std::size_t>(std::floor(low_frac * n + 0.5));
    const std::size_t n_high = static_cast<std::size_t>(std::floor(high_frac * n + 0.5));
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_low) {
            dataset.samples[i].stratum = Stratum::Low;
        } else if (i >= n - n_high) {
            dataset.samples[i].stratum = Stratum::High;
        } else {
            dataset.samples[i].stratum = Stratum::Mid;
        }
    }
    dataset.low_threshold = n_low > 0 ? dataset.samples[n_low - 1].ic : dataset.samples.front().ic;
    dataset.high_threshold = n_high > 0 ? dataset.samples[n - n_high].ic : dataset.samples.back().ic;
}

Dataset make_length_gen_testset(const TransitionModel& model, int length_test,
                                int n_test, double power, std::uint64_t seed) {
    if (length_test < 1) {
        throw std::invalid_argument("make_length_gen_testset: length must be >= 1");
    }
    return sample_common(model, n_test, length_test, power, seed);
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "tokens,probability,ic,stratum\n";
    char buf[64];
    for (const Sample& s : dataset.samples) {
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            if (i > 0) {
                out << '-';
            }
            out << s.tokens[i];
        }
        std::snprintf(buf, sizeof(buf), ",%.12e,%.12e,", s.probability, s.ic);
        out << buf << stratum_name(s.stratum) << "\n";
    }
}

void write_model_json(const TransitionModel& model, const std::string& path) {
    nlohmann::json j;
    j["vocab_size"] = model.vocab_size;
    j["seed"] = model.seed;
    j["initial"] = std::vector<double>(model.initial.data(),
                                       model.initial.data() + model.initial.size());
    nlohmann::json trans = nlohmann::json::array();
    for (const Eigen::MatrixXd& t : model.transitions) {
        nlohmann::json rows = nlohmann::json::array();
        for (int i = 0; i < t.rows(); ++i) {
            std::vector<double> row(t.cols());
            for (int jcol = 0; jcol < t.cols(); ++jcol) {
                row[jcol] = t(i, jcol);
            }
            rows.push_back(row);
        }
        trans.push_back(rows);
    }
    j["transitions"] = trans;
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << j.dump(2) << "\n";
}

TransitionModel read_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    nlohmann::json j;
    in >> j;
    TransitionModel model;
    model.vocab_size = j.at("vocab_size").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    const auto init = j.at("initial").get<std::vector<double>>();
    model.initial = Eigen::Map<const Eigen::VectorXd>(init.data(), init.size());
    for (const auto& rows : j.at("transitions")) {
        Eigen::MatrixXd t(model.vocab_size, model.vocab_size);
        for (int i = 0; i < model.vocab_size; ++i) {
            for (int jcol = 0; jcol < model.vocab_size; ++jcol) {
                t(i, jcol) = rows.at(i).at(jcol).get<double>();
            }
        }
        model.transitions.push_back(std::move(t));
    }
    return model;
}

Dataset read_dataset_csv(const std::string& path, const TransitionModel& model) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    Dataset ds;
    ds.source_model = model;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        std::string tok_field, p_field, ic_field, stratum_field;
        std::getline(ss, tok_field, ',');
        std::getline(ss, p_field, ',');
        std::getline(ss, ic_field, ',');
        std::getline(ss, stratum_field, ',');
        Sample s;
        std::istringstream ts(tok_field);
        std::string piece;
        while (std::getline(ts, piece, '-')) {
            s.tokens.push_back(std::stoi(piece));
        }
        s.probability = std::stod(p_field);
        s.ic = std::stod(ic_field);
        if (stratum_field == "low") {
            s.stratum = Stratum::Low;
        } else if (stratum_field == "high") {
            s.stratum = Stratum::High;
        } else {
            s.stratum = Stratum::Mid;
        }
        ds.samples.push_back(std::move(s));
    }
    if (!ds.samples.empty()) {
        ds.length = static_cast<int>(ds.samples.front().tokens.size());
        double lo = 0.0, hi = 0.0;
        for (const Sample& s : ds.samples) {
            if (s.stratum == Stratum::Low) {
                lo = std::max(lo, s.ic);
            }
        }
        hi = ds.samples.back().ic;
        for (const Sample& s : ds.samples) {
            if (s.stratum == Stratum::High) {
                hi = std::min(hi, s.ic);
            }
        }
        ds.low_threshold = lo;
        ds.high_threshold = hi;
    }
    return ds;
}

} // namespace llab
