#ifndef LLAB_MARKOV_HPP
#define LLAB_MARKOV_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace llab {

/// Token-level Markov language: a uniform initial distribution plus an
/// ordered list of row-stochastic transition matrices applied cyclically.
struct TransitionModel {
    int vocab_size = 0;
    Eigen::VectorXd initial;                  // length V, sums to 1
    std::vector<Eigen::MatrixXd> transitions; // m row-stochastic V x V matrices
    std::uint64_t seed = 0;
};

enum class Stratum { Low, Mid, High };

std::string stratum_name(Stratum s);

struct Sample {
    std::vector<int> tokens;
    double probability = 0.0;
    double ic = 0.0; // nats
    Stratum stratum = Stratum::Mid;
};

struct Dataset {
    std::vector<Sample> samples;
    TransitionModel source_model;
    int length = 0;
    double sampling_power = 0.0;
    double low_threshold = 0.0;
    double high_threshold = 0.0;
};

// Exhaustive enumeration is used while V^L stays below this cap; longer
// sequences fall back to ancestral sampling with importance reweighting.
inline constexpr std::uint64_t kEnumerationCap = 1000000;

TransitionModel build_transition_model(std::uint64_t seed, int vocab_size, int num_matrices);

double sequence_probability(const TransitionModel& model, const std::vector<int>& tokens);

double information_content(double probability);

Dataset sample_dataset(const TransitionModel& model, int n_samples, int length,
                       double power, std::uint64_t seed);

void stratify(Dataset& dataset, double low_frac = 0.4, double high_frac = 0.4);

Dataset make_length_gen_testset(const TransitionModel& model, int length_test,
                                int n_test, double power, std::uint64_t seed);

void write_dataset_csv(const Dataset& dataset, const std::string& path);
void write_model_json(const TransitionModel& model, const std::string& path);
TransitionModel read_model_json(const std::string& path);
Dataset read_dataset_csv(const std::string& path, const TransitionModel& model);

} // namespace llab

#endif
