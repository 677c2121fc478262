#include "llab/quadsim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "llab/rng.hpp"

namespace llab {

namespace {

constexpr double kSingularEig = 1e-10;
constexpr double kDivergenceCap = 1e12;

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            m(i, j) = rng.normal();
        }
    }
    return m;
}

Eigen::MatrixXd random_orthogonal(std::uint64_t seed, int d) {
    Rng rng(seed);
    const Eigen::MatrixXd g = gaussian_matrix(rng, d, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) {
        if (r(i, i) < 0.0) {
            q.col(i) = -q.col(i);
        }
    }
    return q;
}

double operator_norm(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

} // namespace

double quad_loss(const QuadLandscape& land, const Eigen::VectorXd& theta_v,
                 const Eigen::VectorXd& theta_r) {
    return 0.5 * theta_v.dot(land.h_valley * theta_v) - land.h_r.dot(theta_r) +
           theta_r.dot(land.h_rv * theta_v);
}

QuadTrajectory simulate(const QuadLandscape& land, int steps) {
    if (steps < 0) {
        throw std::invalid_argument("simulate: steps must be non-negative");
    }
    QuadTrajectory traj;
    Eigen::VectorXd v = land.theta_v0;
    Eigen::VectorXd r = land.theta_r0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(land.h_r.size());
    traj.theta_v.push_back(v);
    traj.theta_r.push_back(r);
    traj.losses.push_back(quad_loss(land, v, r));
    traj.cumulative_force.push_back(c);
    const Eigen::MatrixXd h_vr = land.h_rv.transpose();
    for (int k = 0; k < steps; ++k) {
        const Eigen::VectorXd force = land.eta * (land.h_rv * v);
        const Eigen::VectorXd v_next = v - land.eta * (land.h_valley * v + h_vr * r);
        const Eigen::VectorXd r_next = r - land.eta * (land.h_rv * v - land.h_r);
        v = v_next;
        r = r_next;
        c += force;
        traj.theta_v.push_back(v);
        traj.theta_r.push_back(r);
        traj.losses.push_back(quad_loss(land, v, r));
        traj.cumulative_force.push_back(c);
        if (v.norm() > kDivergenceCap || r.norm() > kDivergenceCap) {
            traj.diverged = true;
            traj.diverge_step = k + 1;
            break;
        }
    }
    return traj;
}

Eigen::VectorXd unforced_closed_form(const QuadLandscape& land, int steps) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(land.h_valley);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("unforced_closed_form: eigensolver failed");
    }
    const Eigen::VectorXd lambda = solver.eigenvalues();
    const Eigen::MatrixXd v = solver.eigenvectors();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(land.h_r.size());
    for (int i = 0; i < lambda.size(); ++i) {
        const double proj = v.col(i).dot(land.theta_v0);
        const Eigen::VectorXd dir = land.h_rv * v.col(i);
        if (std::abs(lambda(i)) < kSingularEig) {
            c += steps * land.eta * proj * dir; // analytic limit of the geometric sum
        } else {
            const double rho = 1.0 - land.eta * lambda(i);
            c += (proj / lambda(i)) * (1.0 - std::pow(rho, steps)) * dir;
        }
    }
    return c;
}

Eigen::VectorXd unforced_iterated(const QuadLandscape& land, int steps) {
    Eigen::VectorXd y = land.theta_v0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(land.h_r.size());
    for (int k = 0; k < steps; ++k) {
        c += land.eta * (land.h_rv * y);
        y -= land.eta * (land.h_valley * y);
    }
    return c;
}

CapacityBound capacity_bound(const QuadLandscape& land, double tau) {
    CapacityBound bound;
    bound.h_bar = operator_norm(land.h_rv);
    bound.alpha_bar = land.theta_v0.norm();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(land.h_valley);
    const Eigen::VectorXd lambda = solver.eigenvalues();
    const double scale = std::sqrt(static_cast<double>(lambda.size())) * bound.h_bar *
                         bound.alpha_bar;
    for (int i = 0; i < lambda.size(); ++i) {
        if (std::abs(lambda(i)) < kSingularEig) {
            bound.infinite = true;
            continue;
        }
        const double term = scale / std::abs(lambda(i));
        if (lambda(i) <= tau) {
            bound.dominant += term;
        } else {
            bound.residual += term;
        }
    }
    bound.total = bound.infinite ? std::numeric_limits<double>::infinity()
                                 : bound.dominant + bound.residual;
    return bound;
}

namespace {

double max_abs_rho(const QuadLandscape& land) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(land.h_valley);
    const Eigen::VectorXd lambda = solver.eigenvalues();
    double rho = 0.0;
    for (int i = 0; i < lambda.size(); ++i) {
        rho = std::max(rho, std::abs(1.0 - land.eta * lambda(i)));
    }
    return rho;
}

} // namespace

ComparisonReport compare_models(const QuadLandscape& land_single,
                                const QuadLandscape& land_looped, int k_max, double tau) {
    ComparisonReport report;
    const double rho = std::max(max_abs_rho(land_single), max_abs_rho(land_looped));
    int k = k_max;
    report.capacity_reached = false;
    if (rho < 1.0) {
        const int k_conv =
            static_cast<int>(std::ceil(std::log(1e-8) / std::log(rho))) + 1;
        if (k_conv <= k_max) {
            k = k_conv;
            report.capacity_reached = true;
        }
    }
    report.k_used = k;
    const QuadTrajectory t1 = simulate(land_single, k);
    const QuadTrajectory t2 = simulate(land_looped, k);
    const CapacityBound c1 = capacity_bound(land_single, tau);
    const CapacityBound c2 = capacity_bound(land_looped, tau);
    report.capacity_1 = c1.total;
    report.capacity_2 = c2.total;
    report.capacity_dom_1 = c1.dominant;
    report.capacity_dom_2 = c2.dominant;
    report.force_1 = t1.cumulative_force.back().norm();
    report.force_2 = t2.cumulative_force.back().norm();
    report.loss_1 = t1.losses.back();
    report.loss_2 = t2.losses.back();
    return report;
}

GeneralResult simulate_general(const GeneralLandscape& land, int steps) {
    GeneralResult result;
    QuadTrajectory& traj = result.trajectory;
    const int d_v = static_cast<int>(land.theta_v0.size());
    Eigen::VectorXd v = land.theta_v0;
    Eigen::VectorXd r = land.theta_r0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(land.theta_r0.size());
    Eigen::VectorXd y = land.theta_v0; // unforced valley iterate
    Eigen::VectorXd c_unforced = Eigen::VectorXd::Zero(land.theta_r0.size());

    auto loss_at = [&](int k, const Eigen::VectorXd& tv, const Eigen::VectorXd& tr) {
        return 0.5 * tv.dot(land.h_valley_fn(k) * tv) - land.h_r_fn(k).dot(tr) +
               tr.dot(land.h_rv_fn(k) * tv);
    };

    traj.theta_v.push_back(v);
    traj.theta_r.push_back(r);
    traj.losses.push_back(loss_at(0, v, r));
    traj.cumulative_force.push_back(c);
    for (int k = 0; k < steps; ++k) {
        const Eigen::MatrixXd h_v = land.h_valley_fn(k);
        const Eigen::MatrixXd h_rv = land.h_rv_fn(k);
        const Eigen::VectorXd h_r = land.h_r_fn(k);
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff(h_v - land.h_b);
            if (diff.eigenvalues().minCoeff() < -1e-9) {
                throw std::invalid_argument(
                    "simulate_general: Loewner lower bound violated at step " +
                    std::to_string(k));
            }
        }
        const Eigen::VectorXd force = land.eta * (h_rv * v);
        const Eigen::VectorXd v_next = v - land.eta * (h_v * v + h_rv.transpose() * r);
        const Eigen::VectorXd r_next = r - land.eta * (h_rv * v - h_r);
        c_unforced += land.eta * (h_rv * y);
        y -= land.eta * (h_v * y);
        v = v_next;
        r = r_next;
        c += force;
        traj.theta_v.push_back(v);
        traj.theta_r.push_back(r);
        traj.losses.push_back(loss_at(k + 1, v, r));
        traj.cumulative_force.push_back(c);
        if (v.norm() > kDivergenceCap || r.norm() > kDivergenceCap) {
            traj.diverged = true;
            traj.diverge_step = k + 1;
            break;
        }
    }
    result.unforced_force = c_unforced;
    result.unforced_force_norm = c_unforced.norm();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(land.h_b);
    const Eigen::VectorXd lambda_b = solver.eigenvalues();
    double inv_sum = 0.0;
    for (int i = 0; i < lambda_b.size(); ++i) {
        if (std::abs(lambda_b(i)) < kSingularEig) {
            result.bound_infinite = true;
        } else {
            inv_sum += 1.0 / std::abs(lambda_b(i));
        }
    }
    result.bound = result.bound_infinite
                       ? std::numeric_limits<double>::infinity()
                       : std::sqrt(static_cast<double>(d_v)) * land.h_bar_gen *
                             land.theta_v0.norm() * inv_sum;
    result.bound_holds = result.unforced_force_norm <= result.bound;
    return result;
}

GeneralLandscape make_affine_general(const QuadLandscape& base, const Eigen::MatrixXd& psd_p,
                                     const std::function<double(int)>& s_fn) {
    GeneralLandscape g;
    g.h_b = base.h_valley;
    const Eigen::MatrixXd h_b = base.h_valley;
    const Eigen::MatrixXd p = psd_p;
    g.h_valley_fn = [h_b, p, s_fn](int k) { return (h_b + s_fn(k) * p).eval(); };
    const Eigen::MatrixXd h_rv = base.h_rv;
    g.h_rv_fn = [h_rv](int) { return h_rv; };
    const Eigen::VectorXd h_r = base.h_r;
    g.h_r_fn = [h_r](int) { return h_r; };
    g.h_bar_gen = operator_norm(base.h_rv);
    g.theta_v0 = base.theta_v0;
    g.theta_r0 = base.theta_r0;
    g.eta = base.eta;
    return g;
}

QuadLandscape from_spectrum(const std::vector<double>& spectrum, int d_r,
                            std::uint64_t basis_seed, std::uint64_t shared_seed,
                            double coupling_norm, double alpha_bar, double eta) {
    const int d_v = static_cast<int>(spectrum.size());
    if (d_v < 1 || d_r < 1) {
        throw std::invalid_argument("from_spectrum: dimensions must be positive");
    }
    QuadLandscape land;
    const Eigen::MatrixXd q = random_orthogonal(basis_seed, d_v);
    Eigen::VectorXd diag(d_v);
    for (int i = 0; i < d_v; ++i) {
        diag(i) = spectrum[i];
    }
    land.h_valley = q * diag.asDiagonal() * q.transpose();
    land.h_valley = 0.5 * (land.h_valley + land.h_valley.transpose().eval());

    Rng rng(derive_seed(shared_seed, 0x9a7d));
    land.h_rv = gaussian_matrix(rng, d_r, d_v);
    land.h_rv *= coupling_norm / operator_norm(land.h_rv);
    land.h_r = gaussian_matrix(rng, d_r, 1).col(0);
    land.h_r.normalize();
    land.theta_v0 = gaussian_matrix(rng, d_v, 1).col(0);
    land.theta_v0 *= alpha_bar / land.theta_v0.norm();
    land.theta_r0 = Eigen::VectorXd::Zero(d_r);
    land.eta = eta;
    return land;
}

QuadLandscape random_instance(std::uint64_t seed, int d_v, int d_r, double lambda_min,
                              double lambda_max, double coupling_norm, double alpha_bar,
                              double stability_frac) {
    Rng rng(derive_seed(seed, 0x51ab));
    std::vector<double> spectrum(d_v);
    double max_lambda = 0.0;
    for (int i = 0; i < d_v; ++i) {
        spectrum[i] = lambda_min + (lambda_max - lambda_min) * rng.uniform01();
        max_lambda = std::max(max_lambda, spectrum[i]);
    }
    const double eta = stability_frac / max_lambda;
    return from_spectrum(spectrum, d_r, derive_seed(seed, 1), derive_seed(seed, 2),
                         coupling_norm, alpha_bar, eta);
}

std::pair<QuadLandscape, QuadLandscape> assumption1_pair(
    const std::vector<double>& spectrum_single, const std::vector<double>& spectrum_looped,
    int d_r, std::uint64_t seed, double coupling_norm, double alpha_bar, double eta,
    double tau) {
    if (spectrum_single.size() != spectrum_looped.size()) {
        throw std::invalid_argument("assumption1_pair: spectra must share the dimension");
    }
    std::vector<double> s1 = spectrum_single;
    std::vector<double> s2 = spectrum_looped;
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    int m1 = 0, m2 = 0;
    for (double v : s1) {
        m1 += v <= tau;
    }
    for (double v : s2) {
        m2 += v <= tau;
    }
    if (m2 <= m1) {
        throw std::invalid_argument("assumption1_pair: requires m2 > m1 at tau");
    }
    for (int i = 0; i < m1; ++i) {
        if (!(s2[i] < s1[i])) {
            throw std::invalid_argument(
                "assumption1_pair: component-wise dominance violated");
        }
    }
    const std::uint64_t basis_seed = derive_seed(seed, 10);
    const std::uint64_t shared_seed = derive_seed(seed, 11);
    return {from_spectrum(s1, d_r, basis_seed, shared_seed, coupling_norm, alpha_bar, eta),
            from_spectrum(s2, d_r, basis_seed, shared_seed, coupling_norm, alpha_bar, eta)};
}

void write_trajectory_csv(const QuadTrajectory& traj, const QuadLandscape& land,
                          double bound, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "k,loss,force_norm,closed_form_norm,bound\n";
    char buf[256];
    for (std::size_t k = 0; k < traj.losses.size(); ++k) {
        const double closed =
            unforced_closed_form(land, static_cast<int>(k)).norm();
        std::snprintf(buf, sizeof(buf), "%zu,%.12e,%.12e,%.12e,%.12e\n", k, traj.losses[k],
                      traj.cumulative_force[k].norm(), closed, bound);
        out << buf;
    }
}

QuadLandscape read_instance_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    nlohmann::json j;
    in >> j;
    const int d_r = j.at("d_r").get<int>();
    const std::vector<double> spectrum = j.at("valley_spectrum").get<std::vector<double>>();
    if (j.contains("d_v") && j.at("d_v").get<int>() != static_cast<int>(spectrum.size())) {
        throw std::runtime_error("instance json: d_v does not match valley_spectrum length");
    }
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});
    QuadLandscape land = from_spectrum(
        spectrum, d_r, derive_seed(seed, 1), derive_seed(seed, 2),
        j.value("coupling_norm", 1.0), j.value("alpha_bar", 1.0), j.at("eta").get<double>());
    if (j.contains("river_gradient")) {
        const std::vector<double> h_r = j.at("river_gradient").get<std::vector<double>>();
        if (static_cast<int>(h_r.size()) != d_r) {
            throw std::runtime_error("instance json: river_gradient length != d_r");
        }
        for (int i = 0; i < d_r; ++i) {
            land.h_r(i) = h_r[i];
        }
    }
    return land;
}

void write_instance_json(const QuadLandscape& land, std::uint64_t seed,
                         const std::string& path) {
    nlohmann::json j;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(land.h_valley);
    const Eigen::VectorXd lambda = solver.eigenvalues();
    j["d_v"] = static_cast<int>(land.theta_v0.size());
    j["d_r"] = static_cast<int>(land.theta_r0.size());
    j["valley_spectrum"] = std::vector<double>(lambda.data(), lambda.data() + lambda.size());
    j["coupling_norm"] = operator_norm(land.h_rv);
    j["alpha_bar"] = land.theta_v0.norm();
    j["river_gradient"] =
        std::vector<double>(land.h_r.data(), land.h_r.data() + land.h_r.size());
    j["eta"] = land.eta;
    j["seed"] = seed;
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << j.dump(2) << "\n";
}

} // namespace llab
