#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nshops/bath.hpp"
#include "nshops/exceptions.hpp"
#include "nshops/rng.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>

using namespace nshops;
using namespace nshops::bath;

TEST_CASE("exponential kernel values and symmetry") {
    CHECK(kernel(2.0, 0.0) == 1.0);
    CHECK(kernel(1.0, -3.0) == kernel(1.0, 3.0));
    CHECK_THROWS_AS((void)kernel(0.0, 1.0), ModelDomainError);

    // unit integral, composite Simpson over [-L, L]
    const double rate = 0.7, L = 40.0 / rate;
    const int n = 40000;
    const double h = 2.0 * L / n;
    double integral = kernel(rate, -L) + kernel(rate, L);
    for (int i = 1; i < n; ++i)
        integral += kernel(rate, -L + i * h) * (i % 2 ? 4.0 : 2.0);
    integral *= h / 3.0;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("single-mode squeezed BCF at the origin") {
    const auto model = single_mode_squeezed(1.0, 5.0, 1.5, 0.0, 1.0);
    // alpha(0,0) = (Gamma/2) |f(0)|^2 with f(0) = e^{-r}
    const cplx a00 = eval_bcf(model, 0.0, 0.0);
    CHECK(a00.real() == doctest::Approx(0.5 * std::exp(-3.0)).epsilon(1e-12));
    CHECK(a00.real() == doctest::Approx(0.024894).epsilon(1e-4));
    CHECK(std::abs(a00.imag()) < 1e-15);
}

TEST_CASE("unsqueezed limit recovers the stationary form") {
    const double gamma = 0.8, omega0 = 3.0, rate = 1.3;
    const auto model = single_mode_squeezed(gamma, omega0, 0.0, 0.0, rate);
    for (double t : {0.0, 0.3, 1.7})
        for (double s : {0.1, 0.9, 2.4}) {
            const cplx expected = 0.5 * rate * gamma * std::exp(-rate * std::abs(t - s)) *
                                  std::polar(1.0, -omega0 * (t - s));
            CHECK(std::abs(eval_bcf(model, t, s) - expected) < 1e-14);
        }
    // f(t) = sqrt(gamma) e^{-i omega0 t}
    const cplx f = eval(model.modes[0].f, 0.77);
    CHECK(std::abs(f - std::sqrt(gamma) * std::polar(1.0, -omega0 * 0.77)) < 1e-15);
}

TEST_CASE("Hermitian symmetry of the DPA correlation function") {
    const auto model = dpa_three_mode(1.0, 5.0, 2.0, 1.0, 0.5, 3.141592653589793);
    RngStream rng(7, 0);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const double t = 10.0 * rng.uniform01();
            const double s = 10.0 * rng.uniform01();
            CHECK(std::abs(eval_bcf(model, t, s) - std::conj(eval_bcf(model, s, t))) < 1e-12);
        }
}

TEST_CASE("discretized correlation matrices of built-in models are PSD") {
    for (const auto& model :
         {single_mode_squeezed(1.0, 5.0, 1.5, 0.0, 0.2),
          dpa_three_mode(1.0, 5.0, 2.0, 1.0, 0.5, 3.141592653589793)}) {
        const int m = 40;
        Eigen::MatrixXcd a(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) a(i, j) = eval_bcf(model, 0.25 * i, 0.25 * j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
        const double scale = a.cwiseAbs().maxCoeff();
        CHECK(es.eigenvalues().minCoeff() > -1e-8 * scale);
    }
}

TEST_CASE("Bogoliubov coefficients of the squeezing transformation") {
    auto f = std::get<SqueezedCoeff>(single_mode_squeezed(1.0, 5.0, 1.5, 0.0, 1.0).modes[0].f);
    CHECK(f.u == doctest::Approx(2.352410).epsilon(1e-6));
    CHECK(f.v == doctest::Approx(2.129279).epsilon(1e-6));
    CHECK(f.u * f.u - f.v * f.v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("squeezed coefficient magnitude identity") {
    const double gamma = 0.9, omega0 = 4.0, r = 1.1, phi = 0.6;
    const auto model = single_mode_squeezed(gamma, omega0, r, phi, 1.0);
    const double u = std::cosh(r), v = std::sinh(r);
    for (double t : {0.0, 0.21, 1.9, 4.4}) {
        const double expected =
            gamma * (u * u + v * v - 2.0 * u * v * std::cos(2.0 * omega0 * t - phi));
        CHECK(std::norm(eval(model.modes[0].f, t)) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("DPA construction matches the Fig.-style parameter set") {
    const auto [u, v] = dpa_bogoliubov(2.0, 1.0, 0.5);
    CHECK(u == doctest::Approx(1.07349).epsilon(1e-5));
    CHECK(v == doctest::Approx(0.39036).epsilon(1e-5));
    CHECK(u * u - v * v == doctest::Approx(1.0).epsilon(1e-10));

    const auto model = dpa_three_mode(1.0, 5.0, 2.0, 1.0, 0.5, 3.141592653589793);
    REQUIRE(model.mode_count() == 3);
    CHECK(model.modes[0].gamma_rate == 2.0);
    CHECK(model.modes[1].gamma_rate == 0.5);
    CHECK(model.modes[2].gamma_rate == 1.5);
    CHECK(model.modes[0].pseudomode_ok);
    CHECK(model.modes[1].pseudomode_ok);
    CHECK(!model.modes[2].pseudomode_ok);
    CHECK(!model.pseudomode_ok());
    // g_3 = -f_3
    for (double t : {0.2, 1.1})
        CHECK(std::abs(eval(model.modes[2].g, t) + eval(model.modes[2].f, t)) < 1e-15);
}

TEST_CASE("wideband limit removes the squeezing of the first DPA mode") {
    const auto [u, v] = dpa_bogoliubov(1000.0, 1.0, 0.5);
    CHECK(std::abs(u - 1.0) < 1e-4);
    CHECK(std::abs(v) < 1e-4);
}

TEST_CASE("Bogoliubov identity across random admissible parameters") {
    RngStream rng(99, 0);
    for (int i = 0; i < 1000; ++i) {
        const double gc = 0.2 + 3.0 * rng.uniform01();
        const double eps = gc * (0.02 + 0.95 * rng.uniform01());
        const double g0 = (gc + eps) * (1.02 + 4.0 * rng.uniform01());
        const auto [u, v] = dpa_bogoliubov(g0, gc, eps);
        CHECK(std::abs(u * u - v * v - 1.0) < 1e-10);
    }
}

TEST_CASE("DPA parameter-domain violations name the inequality") {
    auto message_of = [](auto&& call) -> std::string {
        try {
            call();
        } catch (const ModelDomainError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message_of([] { (void)dpa_three_mode(1.0, 5.0, 3.0, 1.0, 1.0, 0.0); })
              .find("eps < Gamma") != std::string::npos);
    CHECK(message_of([] { (void)dpa_three_mode(1.0, 5.0, 1.2, 1.0, 0.5, 0.0); })
              .find("Gamma0 > Gamma + eps") != std::string::npos);
}

TEST_CASE("effective squeezing of the DPA output") {
    CHECK(effective_squeezing(1.0, 0.5) == doctest::Approx(0.5493).epsilon(2e-4));
    CHECK(effective_squeezing(1.0, 0.0) == 0.0);
    const double direct = std::acosh(1.0 / std::sqrt(1.0 - 0.99 * 0.99));
    CHECK(effective_squeezing(1.0, 0.99) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(effective_squeezing(1.0, 0.99) > effective_squeezing(1.0, 0.9));
    CHECK_THROWS_AS((void)effective_squeezing(1.0, 1.0), ModelDomainError);
}

TEST_CASE("multimode squeezed bath reduces to the single-mode builder") {
    const auto single = single_mode_squeezed(0.9, 5.0, 1.2, 0.4, 1.7);
    const auto multi = uniform_squeezed_multimode({{cplx(0.9, 0.0), 5.0, 1.7}}, 1.2, 0.4, 5.0);
    REQUIRE(multi.mode_count() == 1);
    CHECK(multi.modes[0].gamma_rate == single.modes[0].gamma_rate);
    CHECK(coefficients_equal(multi.modes[0].f, single.modes[0].f));
    CHECK(coefficients_equal(multi.modes[0].g, single.modes[0].g));
    CHECK(multi.modes[0].pseudomode_ok);
}

TEST_CASE("multimode squeezed bath with r = 0 equals the stationary expansion") {
    const std::vector<UniformTerm> terms{{cplx(0.5, 0.0), 4.0, 1.0}, {cplx(0.25, 0.0), 6.0, 2.0}};
    const auto squeezed = uniform_squeezed_multimode(terms, 0.0, 0.0, 5.0);
    const auto stationary = stationary_multimode(terms);
    for (double t : {0.0, 0.37, 2.2})
        for (double s : {0.1, 1.4})
            CHECK(std::abs(eval_bcf(squeezed, t, s) - eval_bcf(stationary, t, s)) < 1e-14);
}

TEST_CASE("complex weights break the pseudomode property") {
    const auto model = uniform_squeezed_multimode({{cplx(0.0, 1.0), 5.0, 1.0}}, 0.5, 0.0, 5.0);
    CHECK(!model.modes[0].pseudomode_ok);
    CHECK(!model.pseudomode_ok());
    // the BCF itself only depends on gamma, not on the branch split
    const auto& m = model.modes[0];
    const cplx fg = eval(m.f, 0.3) * std::conj(eval(m.g, 0.9));
    const cplx direct = cplx(0.0, 1.0) *
                        (std::cosh(0.5) * std::polar(1.0, -5.0 * 0.3) -
                         std::sinh(0.5) * std::polar(1.0, 5.0 * 0.3)) *
                        std::conj(std::cosh(0.5) * std::polar(1.0, -5.0 * 0.9) -
                                  std::sinh(0.5) * std::polar(1.0, 5.0 * 0.9));
    CHECK(std::abs(fg - direct) < 1e-12);
}

TEST_CASE("thermal embedding produces the drive, covariance and BCF terms") {
    SUBCASE("zero temperature has no covariance") {
        const auto e = thermal_embedding({{StationaryCoeff{1.0, 2.0}, 0.0, cplx(0.5, 0.0)}});
        CHECK(e.thermal.empty());
        CHECK(e.thermal_cov(0.3, 0.9) == 0.0);
        CHECK(e.drive.size() == 1);
    }
    SUBCASE("zero displacement has no drive") {
        const auto e = thermal_embedding({{StationaryCoeff{1.0, 2.0}, 0.7, cplx(0.0, 0.0)}});
        CHECK(e.drive.empty());
        CHECK(e.drive_value(1.1) == 0.0);
    }
    SUBCASE("one mode with unit occupation gives 2 cos(omega (t-s))") {
        const double w = 2.0;
        const auto e = thermal_embedding({{StationaryCoeff{1.0, w}, 1.0, cplx(0.0, 0.0)}});
        for (double t : {0.0, 0.4, 1.3})
            for (double s : {0.2, 0.9})
                CHECK(e.thermal_cov(t, s) ==
                      doctest::Approx(2.0 * std::cos(w * (t - s))).epsilon(1e-12));
        CHECK(std::abs(e.bcf(0.4, 0.1) - std::polar(1.0, -w * 0.3)) < 1e-14);
    }
    SUBCASE("negative occupation is rejected") {
        CHECK_THROWS_AS(
            (void)thermal_embedding({{StationaryCoeff{1.0, 2.0}, -0.1, cplx(0.0, 0.0)}}),
            ModelDomainError);
    }
}

TEST_CASE("the drive of a displaced stationary mode oscillates at its frequency") {
    const cplx g = cplx(0.3, 0.1), alpha = cplx(0.5, -0.2);
    const double w = 2.5;
    const auto e = thermal_embedding({{StationaryCoeff{g, w}, 0.0, alpha}});
    for (double t : {0.0, 0.8, 2.1}) {
        const double expected = 2.0 * std::real(g * std::polar(1.0, -w * t) * alpha);
        CHECK(e.drive_value(t) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("system model validates Hermiticity") {
    Eigen::MatrixXcd h(2, 2), l(2, 2);
    h << 1.0, cplx(0.0, 1.0), cplx(0.0, -1.0), -1.0;
    l << 0.0, 1.0, 1.0, 0.0;
    CHECK(make_system(h, l).dim == 2);
    Eigen::MatrixXcd bad = h;
    bad(0, 1) = cplx(0.0, 1.0 + 1e-6);
    CHECK_THROWS_AS((void)make_system(bad, l), ModelDomainError);
}

TEST_CASE("tabulated coefficients interpolate linearly and guard their window") {
    const auto c = make_tabulated({0.0, 1.0, 2.0}, {cplx(0.0, 0.0), cplx(2.0, -2.0), cplx(4.0, 0.0)});
    const TimeCoefficient tc = c;
    CHECK(std::abs(eval(tc, 0.5) - cplx(1.0, -1.0)) < 1e-15);
    CHECK(std::abs(eval(tc, 2.0) - cplx(4.0, 0.0)) < 1e-15);
    CHECK_THROWS_AS((void)eval(tc, 2.5), ModelDomainError);
    CHECK_THROWS_AS((void)make_tabulated({0.0, 0.0}, {cplx(1.0, 0.0), cplx(1.0, 0.0)}),
                    ModelDomainError);
}
