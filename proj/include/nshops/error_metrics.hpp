// error_metrics.hpp — Richardson order estimation, step and truncation
// errors for the deterministic methods, and the ensemble error metric
// against a reference series.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nshops::errlab {

using MatrixSeries = std::vector<Eigen::MatrixXcd>;
// Real entrywise series; masked entries are NaN.
using RealSeries = std::vector<Eigen::MatrixXd>;

// Denominator magnitude below which the order estimate is masked.
constexpr double richardson_mask_floor = 1e-14;

struct ErrorReport {
    std::vector<double> delta; // per stored time
    double rms = 0.0;
    std::string method, config;
};

// p_ij(t) = log2 |(rho_4h - rho_2h) / (rho_2h - rho_h)|, NaN where the
// denominator magnitude falls below the mask floor.
RealSeries richardson_order(const MatrixSeries& rho_h, const MatrixSeries& rho_2h,
                            const MatrixSeries& rho_4h);

// |rho_2h - rho_h| / (2^p - 1), masked where p is masked.
RealSeries step_error(const MatrixSeries& rho_h, const MatrixSeries& rho_2h,
                      const RealSeries& order);

// |rho(nmax) - rho(n_infinity)| entrywise.
RealSeries truncation_error(const MatrixSeries& rho_nmax, const MatrixSeries& rho_ninf);

// Delta(t) = sqrt(sum_ij trun^2 + sum_ij step^2); masked entries count as 0.
ErrorReport total_and_rms(const RealSeries& step, const RealSeries& trunc);

// Delta(t) = sqrt(sum_ij |mean_ij - ref_ij|^2) and its RMS over stored times.
ErrorReport stochastic_error(const MatrixSeries& ensemble_mean, const MatrixSeries& reference);

// Median of all finite entries across the series; NaN when none are.
double median_unmasked(const RealSeries& series);

double rms_of(const std::vector<double>& delta);

} // namespace nshops::errlab
