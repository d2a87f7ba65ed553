// simulate.hpp — run drivers: deterministic propagation, parallel
// trajectory ensembles, parameter scans, and noise validation.

#pragma once

#include "nshops/bath.hpp"
#include "nshops/dynamics.hpp"
#include "nshops/ensemble.hpp"
#include "nshops/fock.hpp"
#include "nshops/noise.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nshops::sim {

enum class Method { HopsLinear, HopsNonlinear, Hme, Pme, PsseLinear, PsseNonlinear };
enum class NoiseRoute { Auto, Covariance, OrnsteinUhlenbeck };

bool is_stochastic(Method m);
const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

// Hard cap on the covariance-route noise grid (the step grid); an
// eigendecomposition beyond this size is rejected with a capacity error.
constexpr long covariance_grid_cap = 4096;

struct RunSpec {
    bath::SystemModel system;
    bath::BathModel bath_model;
    fock::TruncationScheme truncation;
    Eigen::VectorXcd initial_state;
    Method method = Method::Hme;
    double horizon = 10.0;
    long steps = 10000;
    int stored_points = 1000; // stored grid has stored_points + 1 samples incl. t = 0
    long trajectories = 0;
    std::uint64_t seed = 0;
    NoiseRoute noise = NoiseRoute::Auto;
    int threads = 0; // 0 = hardware concurrency
    double rot_omega0 = 0.0;

    double step_size() const { return horizon / static_cast<double>(steps); }
};

struct SeriesResult {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> rho;
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> rho;
    std::vector<Eigen::MatrixXd> rho_se;
    std::vector<std::string> obs_names;
    std::vector<std::vector<double>> obs;    // [time][observable]
    std::vector<std::vector<double>> obs_se;
    long requested = 0;
    long completed = 0;
    long discarded = 0;

    SeriesResult series() const { return {times, rho}; }
};

SeriesResult run_deterministic(const RunSpec& spec);
EnsembleResult run_stochastic(const RunSpec& spec);
// Dispatches on the method; stochastic results are reduced to their mean.
SeriesResult run_any(const RunSpec& spec);

void write_series_csv(const std::string& path, const SeriesResult& result, double rot_omega0);
void write_ensemble_csv(const std::string& path, const EnsembleResult& result);

// ---- parameter scans ---------------------------------------------------------

// Axis names: "nmax" (all modes), "nmax<j>" (one mode, 1-based), "nsum",
// "trajectories", "step".
struct ScanPoint {
    double value = 0.0;
    double r = 0.0;       // total error vs the reference
    double r_trunc = 0.0; // deterministic methods only
    double r_step = 0.0;  // deterministic methods only (constant per scan)
    bool has_sources = false;
};

RunSpec apply_axis(RunSpec spec, const std::string& axis, double value);

std::vector<ScanPoint> scan_axis(const RunSpec& base, const std::string& axis,
                                 const std::vector<double>& values, const RunSpec& reference);

// ---- noise validation ----------------------------------------------------------

struct NoiseCheckReport {
    std::vector<double> grid;
    Eigen::MatrixXcd empirical;     // E[Z(t_i) Z*(t_j)]
    Eigen::MatrixXcd analytic;      // eval_bcf on the grid
    Eigen::MatrixXcd pseudo;        // E[Z(t_i) Z(t_j)], analytically zero
    double max_sigma_cov = 0.0;     // worst deviation in standard errors
    double max_sigma_pseudo = 0.0;
    double max_sigma_mean = 0.0;
    double clipped_fraction = 0.0;
    long draws = 0;
    bool pass = false;              // all three below 5 sigma
};

NoiseCheckReport noise_check(const bath::BathModel& model, const std::vector<double>& grid,
                             long draws, NoiseRoute route, std::uint64_t seed);

void write_noise_check_csv(const std::string& path, const NoiseCheckReport& report);

} // namespace nshops::sim
