// ensemble.hpp — trajectory reductions: projector extraction per method,
// mergeable running sums with standard-error tracking, and Bloch-vector
// observables.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

namespace nshops::ensemble {

using cplx = std::complex<double>;

// ---- per-trajectory reduced contributions -----------------------------------

// |psi_0><psi_0| from the vacuum block of an extended state.
Eigen::MatrixXcd vacuum_projector(Eigen::Ref<const Eigen::VectorXcd> psi, int sys_dim);
// Same, normalized by the vacuum-block norm (Girsanov weighting).
Eigen::MatrixXcd vacuum_projector_normalized(Eigen::Ref<const Eigen::VectorXcd> psi, int sys_dim);
// Partial trace over the pseudo-Fock factor: sum_n b_n b_n†.
Eigen::MatrixXcd fock_trace_projector(Eigen::Ref<const Eigen::VectorXcd> psi, int sys_dim);
// Same, normalized by the full extended norm.
Eigen::MatrixXcd fock_trace_projector_normalized(Eigen::Ref<const Eigen::VectorXcd> psi, int sys_dim);

// ---- density reductions ------------------------------------------------------

// <0| rho |0>: the vacuum block of an extended density.
Eigen::MatrixXcd reduce_vacuum_block(const Eigen::MatrixXcd& rho, int sys_dim);
// sum_n <n| rho |n>: trace over the full pseudo-Fock basis.
Eigen::MatrixXcd reduce_fock_trace(const Eigen::MatrixXcd& rho, int sys_dim);

// ---- observables -------------------------------------------------------------

struct Observable {
    std::string name;
    Eigen::MatrixXcd matrix;
    bool rotating = false; // value = 2 Re(e^{-i omega t} Tr[P matrix])
    double omega = 0.0;    // static observables must be Hermitian
};

struct ObservableSet {
    std::vector<Observable> items;
    double value(std::size_t i, const Eigen::MatrixXcd& projector, double t) const;
};

// sigma_x, sigma_y, sigma_z plus the rotating-frame transverse pair.
ObservableSet bloch_set(double omega0);

// Five columns (sx, sy, sz, rotating x, rotating y) from a reduced series.
std::vector<std::array<double, 5>> bloch_observables(const std::vector<double>& times,
                                                     const std::vector<Eigen::MatrixXcd>& rho,
                                                     double omega0);

// ---- accumulator ---------------------------------------------------------------

// Running reduction over trajectories. Merging is associative up to
// floating-point rounding; a fixed merge order makes results reproducible.
class EnsembleAccumulator {
public:
    EnsembleAccumulator() = default;
    EnsembleAccumulator(std::vector<double> times, int sys_dim, ObservableSet observables);

    // `series` holds one reduced projector per stored time.
    void add_trajectory(const std::vector<Eigen::MatrixXcd>& series);
    void merge(const EnsembleAccumulator& other);

    long count() const { return count_; }
    const std::vector<double>& times() const { return times_; }
    int sys_dim() const { return sys_dim_; }
    const ObservableSet& observables() const { return observables_; }

    Eigen::MatrixXcd mean(std::size_t ti) const;
    // Entrywise standard error (sample SD of the complex entry / sqrt(count));
    // NaN when count < 2.
    Eigen::MatrixXd standard_error(std::size_t ti) const;
    double observable_mean(std::size_t ti, std::size_t oi) const;
    double observable_se(std::size_t ti, std::size_t oi) const;

    const std::vector<Eigen::MatrixXcd>& raw_sum() const { return sum_; }

private:
    std::vector<double> times_;
    int sys_dim_ = 0;
    ObservableSet observables_;
    long count_ = 0;
    std::vector<Eigen::MatrixXcd> sum_;    // per time: sum of projectors
    std::vector<Eigen::MatrixXd> sum_sq_;  // per time: sum of |entry|^2
    std::vector<std::vector<double>> obs_sum_, obs_sq_;
};

} // namespace nshops::ensemble
