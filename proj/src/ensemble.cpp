#include "nshops/ensemble.hpp"

#include "nshops/exceptions.hpp"

#include <cmath>
#include <limits>

namespace nshops::ensemble {

Eigen::MatrixXcd vacuum_projector(Eigen::Ref<const Eigen::VectorXcd> psi, int sys_dim) {
    const auto block = psi.head(sys_dim);
    return block * block.adjoint();
}

Eigen::MatrixXcd vacuum_projector_normalized(Eigen::Ref<const Eigen::VectorXcd> psi, int sys_dim) {
    const auto block = psi.head(sys_dim);
    const double nrm2 = block.squaredNorm();
    if (nrm2 < 1e-300) throw NumericalError("vacuum projection has vanishing norm");
    return (block * block.adjoint()) / nrm2;
}

Eigen::MatrixXcd fock_trace_projector(Eigen::Ref<const Eigen::VectorXcd> psi, int sys_dim) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(sys_dim, sys_dim);
    for (Eigen::Index base = 0; base + sys_dim <= psi.size(); base += sys_dim) {
        const auto block = psi.segment(base, sys_dim);
        out.noalias() += block * block.adjoint();
    }
    return out;
}

Eigen::MatrixXcd fock_trace_projector_normalized(Eigen::Ref<const Eigen::VectorXcd> psi, int sys_dim) {
    const double nrm2 = psi.squaredNorm();
    if (nrm2 < 1e-300) throw NumericalError("extended state has vanishing norm");
    return fock_trace_projector(psi, sys_dim) / nrm2;
}

Eigen::MatrixXcd reduce_vacuum_block(const Eigen::MatrixXcd& rho, int sys_dim) {
    return rho.topLeftCorner(sys_dim, sys_dim);
}

Eigen::MatrixXcd reduce_fock_trace(const Eigen::MatrixXcd& rho, int sys_dim) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(sys_dim, sys_dim);
    for (Eigen::Index base = 0; base + sys_dim <= rho.rows(); base += sys_dim)
        out += rho.block(base, base, sys_dim, sys_dim);
    return out;
}

double ObservableSet::value(std::size_t i, const Eigen::MatrixXcd& projector, double t) const {
    const auto& o = items[i];
    const cplx tr = (projector * o.matrix).trace();
    if (!o.rotating) return tr.real();
    return 2.0 * std::real(std::polar(1.0, -o.omega * t) * tr);
}

ObservableSet bloch_set(double omega0) {
    Eigen::MatrixXcd sx(2, 2), sy(2, 2), sz(2, 2), sp(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, cplx(0, -1), cplx(0, 1), 0;
    sz << 1, 0, 0, -1;
    sp << 0, 1, 0, 0; // |e><g| in the (e, g) ordering
    ObservableSet set;
    set.items.push_back({"sx", sx, false, 0.0});
    set.items.push_back({"sy", sy, false, 0.0});
    set.items.push_back({"sz", sz, false, 0.0});
    set.items.push_back({"tsx", sp, true, omega0});
    set.items.push_back({"tsy", cplx(0, -1) * sp, true, omega0});
    return set;
}

std::vector<std::array<double, 5>> bloch_observables(const std::vector<double>& times,
                                                     const std::vector<Eigen::MatrixXcd>& rho,
                                                     double omega0) {
    if (times.size() != rho.size())
        throw ModelDomainError("time grid and density series have different lengths");
    const auto set = bloch_set(omega0);
    std::vector<std::array<double, 5>> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t k = 0; k < 5; ++k) out[i][k] = set.value(k, rho[i], times[i]);
    return out;
}

EnsembleAccumulator::EnsembleAccumulator(std::vector<double> times, int sys_dim,
                                         ObservableSet observables)
    : times_(std::move(times)), sys_dim_(sys_dim), observables_(std::move(observables)) {
    for (const auto& o : observables_.items) {
        if (o.rotating) continue;
        const double scale = std::max(1.0, o.matrix.cwiseAbs().maxCoeff());
        if ((o.matrix - o.matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw ModelDomainError("static observable '" + o.name + "' is not Hermitian");
    }
    sum_.assign(times_.size(), Eigen::MatrixXcd::Zero(sys_dim_, sys_dim_));
    sum_sq_.assign(times_.size(), Eigen::MatrixXd::Zero(sys_dim_, sys_dim_));
    obs_sum_.assign(times_.size(), std::vector<double>(observables_.items.size(), 0.0));
    obs_sq_.assign(times_.size(), std::vector<double>(observables_.items.size(), 0.0));
}

void EnsembleAccumulator::add_trajectory(const std::vector<Eigen::MatrixXcd>& series) {
    if (series.size() != times_.size())
        throw ModelDomainError("trajectory series does not match the stored grid");
    for (std::size_t ti = 0; ti < series.size(); ++ti) {
        sum_[ti] += series[ti];
        sum_sq_[ti] += series[ti].cwiseAbs2();
        for (std::size_t oi = 0; oi < observables_.items.size(); ++oi) {
            const double v = observables_.value(oi, series[ti], times_[ti]);
            obs_sum_[ti][oi] += v;
            obs_sq_[ti][oi] += v * v;
        }
    }
    ++count_;
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& other) {
    if (other.count_ == 0) return;
    if (other.times_.size() != times_.size() || other.sys_dim_ != sys_dim_)
        throw ModelDomainError("cannot merge accumulators with different layouts");
    for (std::size_t ti = 0; ti < times_.size(); ++ti) {
        sum_[ti] += other.sum_[ti];
        sum_sq_[ti] += other.sum_sq_[ti];
        for (std::size_t oi = 0; oi < observables_.items.size(); ++oi) {
            obs_sum_[ti][oi] += other.obs_sum_[ti][oi];
            obs_sq_[ti][oi] += other.obs_sq_[ti][oi];
        }
    }
    count_ += other.count_;
}

Eigen::MatrixXcd EnsembleAccumulator::mean(std::size_t ti) const {
    if (count_ == 0) throw NumericalError("accumulator is empty");
    return sum_[ti] / static_cast<double>(count_);
}

Eigen::MatrixXd EnsembleAccumulator::standard_error(std::size_t ti) const {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (count_ < 2)
        return Eigen::MatrixXd::Constant(sys_dim_, sys_dim_, nan);
    const double m = static_cast<double>(count_);
    const Eigen::MatrixXd mean_sq = (sum_[ti] / m).cwiseAbs2();
    // Sample variance of the complex entry, real and imaginary parts combined.
    Eigen::MatrixXd var = (sum_sq_[ti] / m - mean_sq) * (m / (m - 1.0));
    var = var.cwiseMax(0.0);
    return (var / m).cwiseSqrt();
}

double EnsembleAccumulator::observable_mean(std::size_t ti, std::size_t oi) const {
    if (count_ == 0) throw NumericalError("accumulator is empty");
    return obs_sum_[ti][oi] / static_cast<double>(count_);
}

double EnsembleAccumulator::observable_se(std::size_t ti, std::size_t oi) const {
    if (count_ < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = static_cast<double>(count_);
    const double mean = obs_sum_[ti][oi] / m;
    double var = (obs_sq_[ti][oi] / m - mean * mean) * (m / (m - 1.0));
    if (var < 0.0) var = 0.0;
    return std::sqrt(var / m);
}

} // namespace nshops::ensemble
