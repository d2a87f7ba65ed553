#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nshops/error_metrics.hpp"
#include "nshops/exceptions.hpp"
#include "nshops/rng.hpp"

#include <cmath>
#include <complex>

using namespace nshops;
using namespace nshops::errlab;
using cplx = std::complex<double>;

namespace {

// synthetic series rho(h) = base + C h^p
MatrixSeries synthetic(const Eigen::MatrixXcd& base, const Eigen::MatrixXcd& c, double h, double p,
                       std::size_t n) {
    MatrixSeries out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = base * static_cast<double>(i + 1) + c * std::pow(h, p);
    return out;
}

} // namespace

TEST_CASE("Richardson order recovers constructed exponents") {
    Eigen::MatrixXcd base(2, 2), c(2, 2);
    base << 1.0, cplx(0.0, 0.5), cplx(0.0, -0.5), -1.0;
    c << 0.3, 0.1, 0.2, 0.4;
    for (double p : {4.0, 2.0}) {
        const auto rho_h = synthetic(base, c, 0.1, p, 5);
        const auto rho_2h = synthetic(base, c, 0.2, p, 5);
        const auto rho_4h = synthetic(base, c, 0.4, p, 5);
        const auto order = richardson_order(rho_h, rho_2h, rho_4h);
        for (const auto& m : order)
            for (Eigen::Index i = 0; i < m.size(); ++i)
                CHECK(m(i) == doctest::Approx(p).epsilon(1e-10));
        CHECK(median_unmasked(order) == doctest::Approx(p).epsilon(1e-10));
    }
}

TEST_CASE("near-zero denominators are masked") {
    Eigen::MatrixXcd base = Eigen::MatrixXcd::Identity(2, 2);
    const MatrixSeries same(3, base);
    const auto order = richardson_order(same, same, same);
    for (const auto& m : order)
        for (Eigen::Index i = 0; i < m.size(); ++i) CHECK(std::isnan(m(i)));
    CHECK(std::isnan(median_unmasked(order)));
}

TEST_CASE("step error reconstructs the quartic coefficient") {
    Eigen::MatrixXcd base(2, 2), c(2, 2);
    base.setZero();
    c << 0.5, 0.25, 0.125, 1.0;
    const double h = 0.05;
    const auto rho_h = synthetic(base, c, h, 4.0, 4);
    const auto rho_2h = synthetic(base, c, 2.0 * h, 4.0, 4);
    const auto rho_4h = synthetic(base, c, 4.0 * h, 4.0, 4);
    const auto order = richardson_order(rho_h, rho_2h, rho_4h);
    const auto step = step_error(rho_h, rho_2h, order);
    for (const auto& m : step)
        for (Eigen::Index i = 0; i < 4; ++i)
            CHECK(m(i) == doctest::Approx(std::abs(c(i)) * std::pow(h, 4.0)).epsilon(1e-9));

    // zero difference gives a masked (hence zero-contribution) entry
    const auto zero_step = step_error(rho_h, rho_h, order);
    for (const auto& m : zero_step)
        for (Eigen::Index i = 0; i < 4; ++i) CHECK((std::isnan(m(i)) || m(i) == 0.0));
}

TEST_CASE("truncation error is the entrywise distance") {
    Eigen::MatrixXcd a(2, 2), b(2, 2);
    a << 1.0, 0.0, 0.0, 1.0;
    b << 1.0, cplx(0.0, 0.1), 0.0, 0.9;
    const auto trunc = truncation_error({a}, {b});
    CHECK(trunc[0](0, 1) == doctest::Approx(0.1));
    CHECK(trunc[0](1, 1) == doctest::Approx(0.1));
    const auto self = truncation_error({a}, {a});
    CHECK(self[0].maxCoeff() == 0.0);
}

TEST_CASE("total error composes the two sources in quadrature") {
    RealSeries step(1, Eigen::MatrixXd::Zero(2, 2));
    RealSeries trunc(1, Eigen::MatrixXd::Zero(2, 2));
    trunc[0](0, 1) = 3.0;
    auto report = total_and_rms(step, trunc);
    CHECK(report.delta[0] == doctest::Approx(3.0));
    CHECK(report.rms == doctest::Approx(3.0));

    step[0](1, 0) = 4.0;
    report = total_and_rms(step, trunc);
    CHECK(report.delta[0] == doctest::Approx(5.0)); // 3-4-5 triangle

    // RMS of a constant series is that constant
    RealSeries s5(7, Eigen::MatrixXd::Zero(2, 2));
    RealSeries t5(7, Eigen::MatrixXd::Zero(2, 2));
    for (auto& m : t5) m(0, 0) = 0.7;
    CHECK(total_and_rms(s5, t5).rms == doctest::Approx(0.7));
}

TEST_CASE("ensemble error against a reference") {
    Eigen::MatrixXcd ref(2, 2);
    ref << 0.6, cplx(0.1, -0.2), cplx(0.1, 0.2), 0.4;
    SUBCASE("identical series has zero error") {
        const auto r = stochastic_error({ref, ref}, {ref, ref});
        CHECK(r.rms == 0.0);
        CHECK(r.delta[0] == 0.0);
    }
    SUBCASE("i.i.d. per-entry noise of scale sigma gives r near 2 sigma") {
        RngStream rng(3, 0);
        const double sigma = 0.01;
        const std::size_t n = 4000;
        MatrixSeries noisy(n), clean(n, ref);
        for (auto& m : noisy) {
            m = ref;
            for (Eigen::Index i = 0; i < 4; ++i)
                m(i) += sigma * 0.7071067811865476 * cplx(rng.normal(), rng.normal());
        }
        const auto r = stochastic_error(noisy, clean);
        CHECK(r.rms == doctest::Approx(2.0 * sigma).epsilon(0.05));
    }
    SUBCASE("the metric ignores a global phase on the underlying trajectories") {
        // density matrices are phase-free; rotating every entry's generating
        // state by e^{i phi} leaves the projector unchanged by construction
        Eigen::VectorXcd psi(2);
        psi << cplx(0.8, 0.0), cplx(0.0, 0.6);
        const Eigen::MatrixXcd p1 = psi * psi.adjoint();
        const Eigen::VectorXcd rotated = std::polar(1.0, 1.234) * psi;
        const Eigen::MatrixXcd p2 = rotated * rotated.adjoint();
        CHECK(stochastic_error({p1}, {p2}).rms < 1e-15);
    }
}

TEST_CASE("rms helper") {
    CHECK(rms_of({}) == 0.0);
    CHECK(rms_of({2.0, 2.0, 2.0}) == doctest::Approx(2.0));
    CHECK(rms_of({3.0, 4.0}) == doctest::Approx(std::sqrt(12.5)));
}

TEST_CASE("grid mismatches are rejected") {
    const MatrixSeries a(3, Eigen::MatrixXcd::Zero(2, 2));
    const MatrixSeries b(2, Eigen::MatrixXcd::Zero(2, 2));
    CHECK_THROWS_AS((void)stochastic_error(a, b), ModelDomainError);
    CHECK_THROWS_AS((void)richardson_order(a, a, b), ModelDomainError);
}
