// noise.hpp — generation of the stochastic drivers: the colored process
// Z(t) via covariance eigendecomposition, its Ornstein-Uhlenbeck special
// case, white-noise increments, and real Gaussian thermal noise.

#pragma once

#include "nshops/bath.hpp"
#include "nshops/rng.hpp"

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

namespace nshops::noise {

using cplx = std::complex<double>;

struct NoisePath {
    std::vector<double> grid;
    Eigen::VectorXcd samples;
};

// Relative floor below which negative covariance eigenvalues are treated
// as round-off and clipped; larger violations reject the model.
constexpr double eigenvalue_floor = 1e-6;

// Immutable factorization shared read-only across trajectory workers.
// Draws are Z = transform * eps with i.i.d. circular complex normals eps.
class ColoredNoiseFactorization {
public:
    static ColoredNoiseFactorization build(const bath::BathModel& model,
                                           const std::vector<double>& grid,
                                           double keep_fraction = 0.0);
    // Same construction from an explicit Hermitian covariance matrix.
    static ColoredNoiseFactorization build_from_matrix(Eigen::MatrixXcd cov,
                                                       std::vector<double> grid,
                                                       double keep_fraction = 0.0);

    Eigen::Index grid_size() const { return transform_.rows(); }
    Eigen::Index rank() const { return transform_.cols(); }
    double clipped_fraction() const { return clipped_fraction_; }
    const std::vector<double>& grid() const { return grid_; }

    void draw(RngStream& rng, Eigen::VectorXcd& out) const;
    NoisePath draw_path(RngStream& rng) const;

private:
    Eigen::MatrixXcd transform_; // eigenvectors * diag(sqrt(lambda))
    std::vector<double> grid_;
    double clipped_fraction_ = 0.0;
};

std::vector<NoisePath> sample_noise_eigen(const bath::BathModel& model,
                                          const std::vector<double>& grid, RngStream& rng,
                                          int count);

// Real-noise counterpart used for thermal fluctuations Y(t).
class RealNoiseFactorization {
public:
    static RealNoiseFactorization build(const std::function<double(double, double)>& cov,
                                        const std::vector<double>& grid);
    static RealNoiseFactorization build_from_matrix(Eigen::MatrixXd cov,
                                                    std::vector<double> grid);

    Eigen::Index grid_size() const { return transform_.rows(); }
    double clipped_fraction() const { return clipped_fraction_; }

    void draw(RngStream& rng, Eigen::VectorXd& out) const;

private:
    Eigen::MatrixXd transform_;
    std::vector<double> grid_;
    double clipped_fraction_ = 0.0;
};

std::vector<Eigen::VectorXd> sample_real_process(const std::function<double(double, double)>& cov,
                                                 const std::vector<double>& grid, RngStream& rng,
                                                 int count);

// ---- Ornstein-Uhlenbeck route (valid when f_j = g_j for every mode) --------

struct OUState {
    std::vector<double> rates;
    Eigen::VectorXcd z;
};

// Stationary start: z_j(0) = xi_j sqrt(Gamma_j / 2).
OUState ou_init(const std::vector<double>& rates, RngStream& rng);

// Euler-Maruyama update z <- z - Gamma z dt + Gamma dW, E[dW dW*] = dt.
void ou_step(OUState& state, double dt, RngStream& rng);

// Z(t) = sum_j f_j(t) z_j(t); requires a pseudomode-compatible model.
cplx assemble_Z_from_ou(const bath::BathModel& model, const OUState& state, double t);

// Complex white-noise increment with E[dW dW*] = dt.
cplx white_noise_increment(RngStream& rng, double dt);

} // namespace nshops::noise
