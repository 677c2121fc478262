#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "llab/hessian.hpp"
#include "llab/markov.hpp"
#include "llab/rng.hpp"

using namespace llab;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd a(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            a(i, j) = rng.normal();
        }
    }
    return 0.5 * (a + a.transpose());
}

} // namespace

TEST_CASE("finite-difference Hessian recovers an injected quadratic exactly") {
    const int n = 7;
    const Eigen::MatrixXd m = random_symmetric(n, 42);
    const GradFn grad = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        return m * theta;
    };
    Rng rng(7);
    Eigen::VectorXd theta0(n);
    for (int i = 0; i < n; ++i) {
        theta0(i) = rng.normal();
    }
    const Eigen::MatrixXd h = hessian_fd(grad, theta0);
    CHECK((h - m).cwiseAbs().maxCoeff() < 1e-9);
    // eigenvalue trace identity on the recovered matrix
    const Eigen::VectorXd spec = eigenspectrum(h);
    CHECK(spec.sum() == doctest::Approx(h.trace()).epsilon(1e-10));
    // descending order
    for (int i = 1; i < spec.size(); ++i) {
        CHECK(spec(i) <= spec(i - 1));
    }
}

TEST_CASE("block Hessian matches an independent second difference of the loss") {
    const int d = 3;
    const TransitionModel tm = build_transition_model(3, 3, 3);
    const Dataset data = sample_dataset(tm, 12, 4, 2.0, 5);
    const EmbeddingMap emap = make_embedding(9, 3, d);
    const Model model = random_model(Arch::looped(2), 11, d, 3, 0.2);
    const Batch batch = to_batch(data);

    const Eigen::MatrixXd h_lib = hessian_block(model, emap, batch, HessBlock::Wv, 1e-4);
    CHECK((h_lib - h_lib.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // independent oracle: second central difference of the scalar loss
    const auto loss_at = [&](const Eigen::MatrixXd& wv) {
        Model work = model;
        work.blocks[0].w_v = wv;
        return batch_loss(work, emap, batch);
    };
    const Eigen::MatrixXd wv0 = model.blocks[0].w_v;
    const double h = 1e-3;
    Eigen::MatrixXd h_ref(d * d, d * d);
    for (int a = 0; a < d * d; ++a) {
        for (int b = 0; b < d * d; ++b) {
            Eigen::MatrixXd w = wv0;
            const int ai = a % d, aj = a / d, bi = b % d, bj = b / d;
            w(ai, aj) += h;
            w(bi, bj) += h;
            const double lpp = loss_at(w);
            w(bi, bj) -= 2 * h;
            const double lpm = loss_at(w);
            w(ai, aj) -= 2 * h;
            const double lmm = loss_at(w);
            w(bi, bj) += 2 * h;
            const double lmp = loss_at(w);
            h_ref(a, b) = (lpp - lpm - lmp + lmm) / (4.0 * h * h);
        }
    }
    CHECK((h_lib - h_ref).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("matrix entropy on constructed spectra") {
    // all eigenvalues in one bin -> zero entropy
    Eigen::VectorXd flat(5);
    flat << 2.0, 2.0, 2.0, 2.0, 2.0;
    CHECK(matrix_entropy(flat) == doctest::Approx(0.0));

    // all magnitudes below the 1e-8 floor -> single underflow bin -> zero
    Eigen::VectorXd tiny(3);
    tiny << 1e-10, -1e-12, 0.0;
    CHECK(matrix_entropy(tiny) == doctest::Approx(0.0));

    // one eigenvalue per cell (3 log bins + underflow) -> ln 4
    Eigen::VectorXd spread(4);
    spread << 1.0, 1e-3, 1e-6, 1e-10;
    CHECK(matrix_entropy(spread, 3) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    // entropy never exceeds ln(bins + 1)
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd spec(40);
        for (int i = 0; i < spec.size(); ++i) {
            spec(i) = rng.normal() * std::exp(rng.uniform01() * 10.0 - 8.0);
        }
        const int bins = 5 + trial % 10;
        CHECK(matrix_entropy(spec, bins) <= std::log(bins + 1.0) + 1e-12);
    }

    CHECK_THROWS_AS(matrix_entropy(flat, 1), std::invalid_argument);
}

TEST_CASE("mutual information identities") {
    Eigen::VectorXd spec(4);
    spec << 1.0, 1e-3, 1e-6, 1e-10;
    // identical spectra: diagonal joint -> MI equals the marginal entropy
    const PairStats same = pair_statistics(spec, spec, 3);
    CHECK(same.mi == doctest::Approx(same.entropy_prev).epsilon(1e-12));
    CHECK(same.entropy_prev == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    // a constant spectrum carries no information
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(4, 0.7);
    CHECK(mutual_information(flat, spec) == doctest::Approx(0.0));
    CHECK(mutual_information(spec, flat) == doctest::Approx(0.0));

    // MI <= min of the marginal entropies, always
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd a(12), b(12);
        for (int i = 0; i < 12; ++i) {
            a(i) = rng.normal() * std::exp(rng.uniform01() * 8.0 - 6.0);
            b(i) = a(i) + 0.1 * rng.normal();
        }
        const PairStats st = pair_statistics(a, b, 10);
        CHECK(st.mi >= 0.0);
        CHECK(st.mi <= std::min(st.entropy_prev, st.entropy_curr) + 1e-12);
    }

    Eigen::VectorXd shorter(3);
    shorter << 1.0, 0.5, 0.2;
    CHECK_THROWS_AS(pair_statistics(spec, shorter), std::invalid_argument);
}

TEST_CASE("river/valley split partitions by the threshold") {
    Eigen::VectorXd spec(5);
    spec << 2.0, 0.5, 0.1, 0.01, -0.3;
    const RiverValleySplit split = river_valley_split(spec, 0.1);
    REQUIRE(split.river_indices.size() == 3);
    REQUIRE(split.valley_indices.size() == 2);
    CHECK(split.river_indices == std::vector<int>{2, 3, 4});
    CHECK(split.valley_indices == std::vector<int>{0, 1});
    CHECK_THROWS_AS(river_valley_split(spec, 0.0), std::invalid_argument);
}

TEST_CASE("valley classification covers all shapes") {
    const ValleyClass u = classify_valley({2.0, 1.9, 1.5});
    CHECK(u.shape == ValleyShape::UShaped);
    CHECK(u.kappa == doctest::Approx(2.0 / 1.5));

    const ValleyClass v = classify_valley({10.0, 0.5});
    CHECK(v.shape == ValleyShape::VShaped);
    CHECK(v.kappa == doctest::Approx(20.0));

    const ValleyClass mid = classify_valley({3.0, 1.0});
    CHECK(mid.shape == ValleyShape::Indeterminate);

    const ValleyClass empty = classify_valley({});
    CHECK(empty.shape == ValleyShape::Indeterminate);
    CHECK(std::isinf(empty.kappa));

    const ValleyClass neg = classify_valley({1.0, -0.1});
    CHECK(neg.shape == ValleyShape::VShaped);
    CHECK(neg.nonpositive_min);
    CHECK(std::isinf(neg.kappa));
}

TEST_CASE("assumption 1 counting and dominance") {
    Eigen::VectorXd single(3), looped(3);
    single << 1.0, 0.4, 0.2;
    looped << 2.0, 0.3, 0.1;
    const Assumption1Check ok = assumption1_check(single, looped, 0.5);
    CHECK(ok.m1 == 2);
    CHECK(ok.m2 == 2);
    CHECK(ok.dominance);

    looped << 2.0, 0.3, 0.25; // 0.25 >= 0.2 breaks strict dominance
    const Assumption1Check bad = assumption1_check(single, looped, 0.5);
    CHECK(bad.m1 == 2);
    CHECK(!bad.dominance);

    CHECK_THROWS_AS(assumption1_check(single, looped, 0.0), std::invalid_argument);
}

TEST_CASE("analyze_spectrum assembles a consistent report and CSVs round-trip") {
    Eigen::VectorXd prev(4), curr(4);
    prev << 4.0, 2.0, 0.05, 0.01;
    curr << 4.2, 2.1, 0.04, 0.02;
    const SpectrumReport r0 = analyze_spectrum(0, "wv", prev, nullptr);
    CHECK(!r0.mi_with_prev.has_value());
    CHECK(r0.epsilon == doctest::Approx(0.05 * 4.0));
    CHECK(r0.river_dim == 2);
    CHECK(r0.valley_dim == 2);
    CHECK(r0.kappa == doctest::Approx(2.0));

    const SpectrumReport r1 = analyze_spectrum(50, "wv", curr, &prev);
    REQUIRE(r1.mi_with_prev.has_value());
    CHECK(*r1.mi_with_prev >= 0.0);

    write_spectrum_csv({r0, r1}, "spectrum_test.csv");
    write_spectrum_metrics_csv({r0, r1}, "spectrum_metrics_test.csv");
    std::ifstream eig("spectrum_test.csv");
    REQUIRE(eig.good());
    int lines = 0;
    std::string line;
    while (std::getline(eig, line)) {
        ++lines;
    }
    CHECK(lines == 1 + 8); // header + 4 eigenvalues per report
    std::ifstream met("spectrum_metrics_test.csv");
    REQUIRE(met.good());
    lines = 0;
    while (std::getline(met, line)) {
        ++lines;
    }
    CHECK(lines == 3);
}
