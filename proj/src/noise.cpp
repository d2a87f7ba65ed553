#include "nshops/noise.hpp"

#include "nshops/exceptions.hpp"

#include <cmath>
#include <lapacke.h>
#include <string>

namespace nshops::noise {

namespace {

// Hermitian eigendecomposition, ascending eigenvalues. LAPACK's
// divide-and-conquer driver is used above a size threshold where Eigen's
// iterative solver becomes the bottleneck.
void hermitian_eig(Eigen::MatrixXcd& a, Eigen::VectorXd& w) {
    const int n = static_cast<int>(a.rows());
    w.resize(n);
    if (n >= 128) {
        const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                        reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                        w.data());
        if (info != 0)
            throw NumericalError("Hermitian eigendecomposition failed (zheevd info=" +
                                 std::to_string(info) + ")");
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
    if (es.info() != Eigen::Success)
        throw NumericalError("Hermitian eigendecomposition failed");
    w = es.eigenvalues();
    a = es.eigenvectors();
}

void symmetric_eig(Eigen::MatrixXd& a, Eigen::VectorXd& w) {
    const int n = static_cast<int>(a.rows());
    w.resize(n);
    if (n >= 128) {
        const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
        if (info != 0)
            throw NumericalError("symmetric eigendecomposition failed (dsyevd info=" +
                                 std::to_string(info) + ")");
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric eigendecomposition failed");
    w = es.eigenvalues();
    a = es.eigenvectors();
}

// Shared post-processing: validate the spectrum, clip round-off negatives,
// optionally drop negligible eigenvalues, scale columns by sqrt(lambda).
template <class Matrix>
double process_spectrum(Matrix& vecs, Eigen::VectorXd& w, double max_diag, double keep_fraction,
                        Eigen::Index& first_kept) {
    const double floor = -eigenvalue_floor * std::max(max_diag, 1e-300);
    double clipped = 0.0, trace = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        if (w(k) < floor)
            throw ModelDomainError("covariance matrix is not positive semi-definite "
                                   "(eigenvalue " +
                                   std::to_string(w(k)) + " below floor " + std::to_string(floor) +
                                   "); the model is not a valid correlation function");
        if (w(k) < 0.0) {
            clipped += -w(k);
            w(k) = 0.0;
        }
        trace += w(k);
    }
    first_kept = 0;
    if (keep_fraction > 0.0 && trace > 0.0) {
        // Eigenvalues are ascending; drop the smallest ones whose combined
        // weight stays below (1 - keep_fraction) of the trace.
        double dropped = 0.0;
        while (first_kept < w.size() &&
               dropped + w(first_kept) <= (1.0 - keep_fraction) * trace) {
            dropped += w(first_kept);
            ++first_kept;
        }
    }
    for (Eigen::Index k = first_kept; k < w.size(); ++k)
        vecs.col(k) *= std::sqrt(w(k));
    return trace > 0.0 ? clipped / trace : 0.0;
}

} // namespace

ColoredNoiseFactorization ColoredNoiseFactorization::build(const bath::BathModel& model,
                                                           const std::vector<double>& grid,
                                                           double keep_fraction) {
    const Eigen::Index m = static_cast<Eigen::Index>(grid.size());
    if (m < 1) throw ModelDomainError("noise grid must contain at least one point");
    Eigen::MatrixXcd cov(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = j; i < m; ++i)
            cov(i, j) = bath::eval_bcf(model, grid[i], grid[j]);
        for (Eigen::Index i = 0; i < j; ++i) cov(i, j) = std::conj(cov(j, i));
    }
    return build_from_matrix(std::move(cov), grid, keep_fraction);
}

ColoredNoiseFactorization ColoredNoiseFactorization::build_from_matrix(Eigen::MatrixXcd cov,
                                                                       std::vector<double> grid,
                                                                       double keep_fraction) {
    if (cov.rows() != cov.cols() || cov.rows() != static_cast<Eigen::Index>(grid.size()))
        throw ModelDomainError("covariance matrix does not match the grid");
    const double max_diag = cov.diagonal().real().maxCoeff();
    Eigen::VectorXd w;
    hermitian_eig(cov, w);
    Eigen::Index first = 0;
    ColoredNoiseFactorization f;
    f.clipped_fraction_ = process_spectrum(cov, w, max_diag, keep_fraction, first);
    f.transform_ = cov.rightCols(cov.cols() - first);
    f.grid_ = std::move(grid);
    return f;
}

void ColoredNoiseFactorization::draw(RngStream& rng, Eigen::VectorXcd& out) const {
    Eigen::VectorXcd eps(transform_.cols());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps(k) = rng.complex_normal();
    out.noalias() = transform_ * eps;
}

NoisePath ColoredNoiseFactorization::draw_path(RngStream& rng) const {
    NoisePath p;
    p.grid = grid_;
    draw(rng, p.samples);
    return p;
}

std::vector<NoisePath> sample_noise_eigen(const bath::BathModel& model,
                                          const std::vector<double>& grid, RngStream& rng,
                                          int count) {
    const auto fact = ColoredNoiseFactorization::build(model, grid);
    std::vector<NoisePath> paths;
    paths.reserve(count);
    for (int i = 0; i < count; ++i) paths.push_back(fact.draw_path(rng));
    return paths;
}

RealNoiseFactorization RealNoiseFactorization::build(
    const std::function<double(double, double)>& cov, const std::vector<double>& grid) {
    const Eigen::Index m = static_cast<Eigen::Index>(grid.size());
    if (m < 1) throw ModelDomainError("noise grid must contain at least one point");
    Eigen::MatrixXd c(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = j; i < m; ++i) {
            c(i, j) = cov(grid[i], grid[j]);
            c(j, i) = c(i, j);
        }
    return build_from_matrix(std::move(c), grid);
}

RealNoiseFactorization RealNoiseFactorization::build_from_matrix(Eigen::MatrixXd cov,
                                                                 std::vector<double> grid) {
    if (cov.rows() != cov.cols() || cov.rows() != static_cast<Eigen::Index>(grid.size()))
        throw ModelDomainError("covariance matrix does not match the grid");
    const double max_diag = cov.diagonal().maxCoeff();
    Eigen::VectorXd w;
    symmetric_eig(cov, w);
    Eigen::Index first = 0;
    RealNoiseFactorization f;
    f.clipped_fraction_ = process_spectrum(cov, w, max_diag, 0.0, first);
    f.transform_ = std::move(cov);
    f.grid_ = std::move(grid);
    return f;
}

void RealNoiseFactorization::draw(RngStream& rng, Eigen::VectorXd& out) const {
    Eigen::VectorXd eps(transform_.cols());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps(k) = rng.normal();
    out.noalias() = transform_ * eps;
}

std::vector<Eigen::VectorXd> sample_real_process(const std::function<double(double, double)>& cov,
                                                 const std::vector<double>& grid, RngStream& rng,
                                                 int count) {
    const auto fact = RealNoiseFactorization::build(cov, grid);
    std::vector<Eigen::VectorXd> paths(count);
    for (auto& p : paths) fact.draw(rng, p);
    return paths;
}

OUState ou_init(const std::vector<double>& rates, RngStream& rng) {
    OUState s;
    s.rates = rates;
    s.z.resize(static_cast<Eigen::Index>(rates.size()));
    for (std::size_t j = 0; j < rates.size(); ++j) {
        if (!(rates[j] > 0.0)) throw ModelDomainError("OU rate Gamma must be > 0");
        s.z(static_cast<Eigen::Index>(j)) = rng.complex_normal() * std::sqrt(0.5 * rates[j]);
    }
    return s;
}

void ou_step(OUState& state, double dt, RngStream& rng) {
    if (!(dt > 0.0)) throw ModelDomainError("OU step requires dt > 0");
    const double sqrt_dt = std::sqrt(dt);
    for (Eigen::Index j = 0; j < state.z.size(); ++j) {
        const double rate = state.rates[static_cast<std::size_t>(j)];
        const cplx dw = rng.complex_normal() * sqrt_dt;
        state.z(j) += -rate * state.z(j) * dt + rate * dw;
    }
}

cplx assemble_Z_from_ou(const bath::BathModel& model, const OUState& state, double t) {
    if (!model.pseudomode_ok())
        throw ModelDomainError("Ornstein-Uhlenbeck noise assembly requires f_j = g_j "
                               "for all modes");
    if (model.mode_count() != static_cast<int>(state.rates.size()))
        throw ModelDomainError("OU state does not match the bath model");
    cplx z = 0.0;
    for (int j = 0; j < model.mode_count(); ++j)
        z += bath::eval(model.modes[static_cast<std::size_t>(j)].f, t) * state.z(j);
    return z;
}

cplx white_noise_increment(RngStream& rng, double dt) {
    if (dt == 0.0) return 0.0;
    return rng.complex_normal() * std::sqrt(dt);
}

} // namespace nshops::noise
