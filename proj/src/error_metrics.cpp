#include "nshops/error_metrics.hpp"

#include "nshops/exceptions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nshops::errlab {

namespace {
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

void check_common_grid(const MatrixSeries& a, const MatrixSeries& b) {
    if (a.size() != b.size())
        throw ModelDomainError("series have different numbers of stored points");
    if (!a.empty() && (a[0].rows() != b[0].rows() || a[0].cols() != b[0].cols()))
        throw ModelDomainError("series have different matrix dimensions");
}
} // namespace

RealSeries richardson_order(const MatrixSeries& rho_h, const MatrixSeries& rho_2h,
                            const MatrixSeries& rho_4h) {
    check_common_grid(rho_h, rho_2h);
    check_common_grid(rho_h, rho_4h);
    RealSeries out(rho_h.size());
    for (std::size_t ti = 0; ti < rho_h.size(); ++ti) {
        const Eigen::MatrixXd num = (rho_4h[ti] - rho_2h[ti]).cwiseAbs();
        const Eigen::MatrixXd den = (rho_2h[ti] - rho_h[ti]).cwiseAbs();
        Eigen::MatrixXd p(num.rows(), num.cols());
        for (Eigen::Index i = 0; i < num.size(); ++i)
            p(i) = den(i) < richardson_mask_floor ? nan : std::log2(num(i) / den(i));
        out[ti] = std::move(p);
    }
    return out;
}

RealSeries step_error(const MatrixSeries& rho_h, const MatrixSeries& rho_2h,
                      const RealSeries& order) {
    check_common_grid(rho_h, rho_2h);
    if (order.size() != rho_h.size())
        throw ModelDomainError("order series does not match the stored grid");
    RealSeries out(rho_h.size());
    for (std::size_t ti = 0; ti < rho_h.size(); ++ti) {
        const Eigen::MatrixXd diff = (rho_2h[ti] - rho_h[ti]).cwiseAbs();
        Eigen::MatrixXd e(diff.rows(), diff.cols());
        for (Eigen::Index i = 0; i < diff.size(); ++i) {
            const double p = order[ti](i);
            e(i) = std::isfinite(p) ? diff(i) / (std::exp2(p) - 1.0) : nan;
        }
        out[ti] = std::move(e);
    }
    return out;
}

RealSeries truncation_error(const MatrixSeries& rho_nmax, const MatrixSeries& rho_ninf) {
    check_common_grid(rho_nmax, rho_ninf);
    RealSeries out(rho_nmax.size());
    for (std::size_t ti = 0; ti < rho_nmax.size(); ++ti)
        out[ti] = (rho_nmax[ti] - rho_ninf[ti]).cwiseAbs();
    return out;
}

ErrorReport total_and_rms(const RealSeries& step, const RealSeries& trunc) {
    if (step.size() != trunc.size())
        throw ModelDomainError("step and truncation series have different lengths");
    ErrorReport report;
    report.delta.resize(step.size());
    for (std::size_t ti = 0; ti < step.size(); ++ti) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < step[ti].size(); ++i) {
            const double s = step[ti](i), r = trunc[ti](i);
            if (std::isfinite(s)) acc += s * s;
            if (std::isfinite(r)) acc += r * r;
        }
        report.delta[ti] = std::sqrt(acc);
    }
    report.rms = rms_of(report.delta);
    return report;
}

ErrorReport stochastic_error(const MatrixSeries& ensemble_mean, const MatrixSeries& reference) {
    check_common_grid(ensemble_mean, reference);
    ErrorReport report;
    report.delta.resize(ensemble_mean.size());
    for (std::size_t ti = 0; ti < ensemble_mean.size(); ++ti)
        report.delta[ti] = (ensemble_mean[ti] - reference[ti]).norm();
    report.rms = rms_of(report.delta);
    return report;
}

double median_unmasked(const RealSeries& series) {
    std::vector<double> vals;
    for (const auto& m : series)
        for (Eigen::Index i = 0; i < m.size(); ++i)
            if (std::isfinite(m(i))) vals.push_back(m(i));
    if (vals.empty()) return nan;
    const std::size_t mid = vals.size() / 2;
    std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
    double hi = vals[mid];
    if (vals.size() % 2 == 1) return hi;
    std::nth_element(vals.begin(), vals.begin() + mid - 1, vals.begin() + mid);
    return 0.5 * (hi + vals[mid - 1]);
}

double rms_of(const std::vector<double>& delta) {
    if (delta.empty()) return 0.0;
    double acc = 0.0;
    for (double d : delta) acc += d * d;
    return std::sqrt(acc / static_cast<double>(delta.size()));
}

} // namespace nshops::errlab
