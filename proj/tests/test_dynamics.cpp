#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nshops/dynamics.hpp"
#include "nshops/exceptions.hpp"
#include "nshops/rng.hpp"
#include "nshops/simulate.hpp"

#include <cmath>
#include <complex>

using namespace nshops;
using namespace nshops::dynamics;
using fock::FockBasis;
using fock::TruncationScheme;
using cplx = std::complex<double>;

namespace {

const double pi = 3.14159265358979323846;

bath::SystemModel tls_system(double omega0) {
    Eigen::MatrixXcd h(2, 2), l(2, 2);
    h << 0.5 * omega0, 0.0, 0.0, -0.5 * omega0;
    l << 0.0, 1.0, 1.0, 0.0; // sigma_x
    return bath::make_system(h, l);
}

Eigen::VectorXcd tls_initial() {
    Eigen::VectorXcd psi(2);
    psi << 1.0 / std::sqrt(2.0), std::polar(1.0 / std::sqrt(2.0), -pi / 4.0);
    return psi;
}

HierarchyContext make_ctx(const bath::BathModel& model, int nmax, double omega0 = 5.0) {
    std::vector<int> caps(static_cast<std::size_t>(model.mode_count()), nmax);
    auto basis = FockBasis::build(TruncationScheme::rectangular(caps));
    return HierarchyContext::make(tls_system(omega0), model, basis);
}

Eigen::VectorXcd random_vector(Eigen::Index n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex_normal();
    return v;
}

// zero every amplitude whose occupation touches the rectangular cap
void clear_boundary(const FockBasis& b, int ds, Eigen::VectorXcd& v) {
    const auto& caps = b.scheme().nmax;
    for (std::size_t k = 0; k < b.size(); ++k)
        for (int j = 0; j < b.mode_count(); ++j)
            if (b.occupation(k, j) == caps[static_cast<std::size_t>(j)])
                for (int s = 0; s < ds; ++s) v(static_cast<Eigen::Index>(k) * ds + s) = 0.0;
}

sim::RunSpec tls_spec(sim::Method method, bath::BathModel model, int nmax, double horizon,
                      long steps, int stored, long trajectories, std::uint64_t seed) {
    sim::RunSpec spec;
    spec.system = tls_system(5.0);
    spec.truncation = TruncationScheme::rectangular(
        std::vector<int>(static_cast<std::size_t>(model.mode_count()), nmax));
    spec.bath_model = std::move(model);
    spec.initial_state = tls_initial();
    spec.method = method;
    spec.horizon = horizon;
    spec.steps = steps;
    spec.stored_points = stored;
    spec.trajectories = trajectories;
    spec.seed = seed;
    spec.rot_omega0 = 5.0;
    return spec;
}

} // namespace

TEST_CASE("RK4 matches its one-step polynomial on dx/dt = -x") {
    Eigen::VectorXcd y(1);
    y(0) = 1.0;
    auto rhs = [](double, const Eigen::VectorXcd& x, Eigen::VectorXcd& dx) { dx = -x; };
    Rk4Stepper<Eigen::VectorXcd> stepper(y);
    stepper.step(rhs, 0.0, 0.1, y);
    const double poly = 1.0 - 0.1 + 0.005 - 0.1 * 0.1 * 0.1 / 6.0 + 0.1 * 0.1 * 0.1 * 0.1 / 24.0;
    CHECK(y(0).real() == doctest::Approx(poly).epsilon(1e-15));
    CHECK(std::abs(y(0).real() - std::exp(-0.1)) < 1e-7);

    auto zero = [](double, const Eigen::VectorXcd&, Eigen::VectorXcd& dx) { dx.setZero(); };
    Eigen::VectorXcd z(3);
    z << 1.0, cplx(0.0, 2.0), -0.5;
    Rk4Stepper<Eigen::VectorXcd> s2(z);
    const Eigen::VectorXcd before = z;
    s2.step(zero, 0.0, 0.3, z);
    CHECK((z - before).norm() == 0.0);
}

TEST_CASE("RK4 shows fourth-order global convergence on the isolated system") {
    // gamma = 0: the hierarchy is inert and the reduced dynamics is exact.
    auto run = [&](long steps) {
        auto spec = tls_spec(sim::Method::Hme, bath::single_mode_squeezed(0.0, 5.0, 0.0, 0.0, 1.0),
                             0, 1.0, steps, 1, 0, 0);
        return sim::run_deterministic(spec).rho.back();
    };
    const cplx exact_eg = (tls_initial()(0) * std::conj(tls_initial()(1))) *
                          std::polar(1.0, -5.0 * 1.0);
    const double e1 = std::abs(run(40)(0, 1) - exact_eg);
    const double e2 = std::abs(run(80)(0, 1) - exact_eg);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("effective Hamiltonian reduces to the system term without coupling") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(0.0, 5.0, 1.5, 0.0, 1.0), 5);
    const auto x = random_vector(ctx.dim, 1);
    Eigen::VectorXcd out(ctx.dim);
    apply_effective_hamiltonian(ctx, 0.7, x, out);
    Eigen::VectorXcd expect = Eigen::VectorXcd::Zero(ctx.dim);
    for (Eigen::Index k = 0; k < ctx.dim; k += 2) {
        expect(k) = 2.5 * x(k);
        expect(k + 1) = -2.5 * x(k + 1);
    }
    CHECK((out - expect).norm() < 1e-14);
}

TEST_CASE("effective Hamiltonian is Hermitian when f = g") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(1.0, 5.0, 1.5, 0.3, 1.0), 8);
    auto u = random_vector(ctx.dim, 2), v = random_vector(ctx.dim, 3);
    clear_boundary(*ctx.basis, 2, u);
    clear_boundary(*ctx.basis, 2, v);
    Eigen::VectorXcd hu(ctx.dim), hv(ctx.dim);
    apply_effective_hamiltonian(ctx, 1.3, u, hu);
    apply_effective_hamiltonian(ctx, 1.3, v, hv);
    CHECK(std::abs(u.dot(hv) - hu.dot(v)) < 1e-12);
}

TEST_CASE("effective Hamiltonian excites one quantum from the vacuum") {
    const auto model = bath::single_mode_squeezed(0.9, 5.0, 1.1, 0.2, 1.7);
    const auto ctx = make_ctx(model, 4);
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(ctx.dim);
    x(0) = 1.0; // |e> ⊗ |0>
    Eigen::VectorXcd out(ctx.dim);
    const double t = 0.45;
    apply_effective_hamiltonian(ctx, t, x, out);
    const cplx expected = std::sqrt(0.5 * 1.7) * std::conj(bath::eval(model.modes[0].g, t));
    // L|e> = |g>, so the n = 1 block holds (0, expected)
    CHECK(std::abs(out(2)) < 1e-15);
    CHECK(std::abs(out(3) - expected) < 1e-14);
    // vacuum block only carries H_S
    CHECK(std::abs(out(0) - 2.5) < 1e-15);
}

TEST_CASE("linear drift on the isolated system is -i H_S") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(0.0, 5.0, 0.0, 0.0, 1.0), 3);
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(ctx.dim);
    x(0) = 1.0;
    HopsLinearRhs rhs(ctx);
    Eigen::VectorXcd out(ctx.dim);
    rhs(0.0, x, out);
    CHECK(std::abs(out(0) - cplx(0.0, -2.5)) < 1e-15);
    CHECK(out.tail(ctx.dim - 1).norm() < 1e-15);
}

TEST_CASE("normalized coupling expectation") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(1.0, 5.0, 1.0, 0.0, 1.0), 3);
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(ctx.dim);
    x(0) = 1.0; // |e>
    CHECK(girsanov_expectation(ctx, x) == 0.0);
    x(1) = 1.0; // (|e> + |g>)/norm
    CHECK(girsanov_expectation(ctx, x) == doctest::Approx(1.0).epsilon(1e-14));
    x *= cplx(0.0, -3.7);
    CHECK(girsanov_expectation(ctx, x) == doctest::Approx(1.0).epsilon(1e-14));
    Eigen::VectorXcd dead = Eigen::VectorXcd::Zero(ctx.dim);
    dead(2) = 1.0; // support only above the vacuum
    CHECK_THROWS_AS((void)girsanov_expectation(ctx, dead), DegenerateTrajectory);
}

TEST_CASE("memory integrals factorize the shift integral") {
    SUBCASE("constant forcing has the closed-form solution") {
        bath::BathModel model;
        model.modes.push_back(bath::make_mode(1.3, bath::StationaryCoeff{1.0, 0.0},
                                              bath::StationaryCoeff{1.0, 0.0}));
        const auto ctx = make_ctx(model, 1);
        Eigen::VectorXcd m(1), dm(1), k1(1), k2(1), k3(1), k4(1), tmp(1);
        m.setZero();
        const double h = 1e-3, T = 2.0;
        auto rhs = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
            memory_derivative(ctx, t, 1.0, y, dy);
        };
        Rk4Stepper<Eigen::VectorXcd> stepper(m);
        for (long n = 0; n < std::lround(T / h); ++n)
            stepper.step(rhs, n * h, h, m);
        const double expected = 0.5 * (1.0 - std::exp(-1.3 * T));
        CHECK(std::abs(m(0) - expected) < 1e-10);
    }
    SUBCASE("zero forcing stays zero") {
        const auto ctx = make_ctx(bath::single_mode_squeezed(1.0, 5.0, 1.0, 0.0, 1.0), 1);
        Eigen::VectorXcd m(1), dm(1);
        m.setZero();
        memory_derivative(ctx, 0.8, 0.0, m, dm);
        CHECK(dm.norm() == 0.0);
    }
    SUBCASE("smooth forcing matches direct quadrature of the shift") {
        const auto model = bath::single_mode_squeezed(1.0, 5.0, 1.2, 0.3, 1.0);
        const auto ctx = make_ctx(model, 1);
        auto lval = [](double t) { return 0.3 + 0.2 * std::cos(1.7 * t); };
        Eigen::VectorXcd m(1);
        m.setZero();
        const double h = 1e-4, T = 2.0;
        auto rhs = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
            memory_derivative(ctx, t, lval(t), y, dy);
        };
        Rk4Stepper<Eigen::VectorXcd> stepper(m);
        for (long n = 0; n < std::lround(T / h); ++n)
            stepper.step(rhs, n * h, h, m);
        const cplx shift = bath::eval(model.modes[0].f, T) * m(0);

        // Simpson quadrature of int_0^T alpha(T, s) L(s) ds
        const int q = 20000;
        const double hq = T / q;
        cplx integral = bath::eval_bcf(model, T, 0.0) * lval(0.0) +
                        bath::eval_bcf(model, T, T) * lval(T);
        for (int i = 1; i < q; ++i)
            integral += bath::eval_bcf(model, T, i * hq) * lval(i * hq) * (i % 2 ? 4.0 : 2.0);
        integral *= hq / 3.0;
        CHECK(std::abs(shift - integral) < 1e-6);
    }
}

TEST_CASE("nonlinear drift without coupling reduces to the linear one") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(0.0, 5.0, 1.0, 0.0, 1.0), 4);
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(ctx.dim + 1);
    y.head(2) = tls_initial();
    y(4) = cplx(0.2, 0.1); // some hierarchy amplitude
    HopsNonlinearRhs nl(ctx);
    HopsLinearRhs lin(ctx);
    Eigen::VectorXcd dy(ctx.dim + 1), dl(ctx.dim);
    nl(0.4, y, dy);
    lin(0.4, y.head(ctx.dim).eval(), dl);
    CHECK((dy.head(ctx.dim) - dl).norm() < 1e-15);
    CHECK(std::abs(dy(ctx.dim)) == 0.0); // memory stays zero
}

TEST_CASE("the normalization drift is the only first-step difference") {
    const auto model = bath::single_mode_squeezed(1.0, 5.0, 1.5, 0.0, 1.0);
    const auto ctx = make_ctx(model, 6);
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(ctx.dim + 1);
    y.head(2) = tls_initial();
    y(2) = cplx(0.1, -0.05); // occupy n = 1 so the lowering term acts
    y(3) = cplx(-0.02, 0.03);

    HopsNonlinearRhs nl(ctx);
    HopsLinearRhs lin(ctx);
    Eigen::VectorXcd dy(ctx.dim + 1), dl(ctx.dim);
    nl(0.0, y, dy);
    lin(0.0, y.head(ctx.dim).eval(), dl);

    const double l0 = girsanov_expectation(ctx, y.head(ctx.dim));
    CHECK(l0 == doctest::Approx(std::cos(pi / 4.0)).epsilon(1e-12));

    Eigen::VectorXcd expected_extra = Eigen::VectorXcd::Zero(ctx.dim);
    fock::add_lowering(*ctx.basis, 2, 0,
                       cplx(0.0, 1.0) * l0 * std::sqrt(0.5) * bath::eval(model.modes[0].f, 0.0),
                       y.head(ctx.dim).eval(), expected_extra);
    CHECK((dy.head(ctx.dim) - dl - expected_extra).norm() < 1e-14);
}

TEST_CASE("master-equation drift vanishes on a stationary isolated state") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(0.0, 5.0, 0.0, 0.0, 1.0), 4);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(ctx.dim, ctx.dim);
    rho(0, 0) = 0.25;
    rho(1, 1) = 0.75; // diagonal in the H_S basis, vacuum hierarchy
    HmeRhs rhs(ctx);
    Eigen::MatrixXcd out(ctx.dim, ctx.dim);
    rhs(0.0, rho, out);
    CHECK(out.norm() < 1e-15);
}

TEST_CASE("hierarchy master equation preserves Hermiticity") {
    const auto model = bath::dpa_three_mode(1.0, 5.0, 2.0, 1.0, 0.5, pi);
    const auto ctx = make_ctx(model, 2);
    Eigen::MatrixXcd rho(ctx.dim, ctx.dim);
    RngStream rng(44, 0);
    for (Eigen::Index j = 0; j < ctx.dim; ++j)
        for (Eigen::Index i = 0; i < ctx.dim; ++i) rho(i, j) = rng.complex_normal();
    rho = ((rho + rho.adjoint()) * 0.5).eval();
    HmeRhs rhs(ctx);
    Eigen::MatrixXcd out(ctx.dim, ctx.dim);
    rhs(0.37, rho, out);
    CHECK((out - out.adjoint()).norm() < 1e-13 * out.norm());
}

TEST_CASE("one master-equation step conserves the reduced trace") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(1.0, 5.0, 1.5, 0.0, 1.0), 10);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(ctx.dim, ctx.dim);
    const auto psi = tls_initial();
    rho.topLeftCorner(2, 2) = psi * psi.adjoint();
    HmeRhs rhs(ctx);
    Rk4Stepper<Eigen::MatrixXcd> stepper(rho);
    stepper.step(rhs, 0.0, 1e-2, rho);
    const cplx tr = rho(0, 0) + rho(1, 1);
    CHECK(std::abs(tr - 1.0) < 1e-12);
}

TEST_CASE("pseudomode dissipator is exactly trace-free") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(1.0, 5.0, 1.5, 0.0, 0.5), 7);
    Eigen::MatrixXcd rho(ctx.dim, ctx.dim);
    RngStream rng(45, 0);
    for (Eigen::Index j = 0; j < ctx.dim; ++j)
        for (Eigen::Index i = 0; i < ctx.dim; ++i) rho(i, j) = rng.complex_normal();
    PmeRhs rhs(ctx);
    Eigen::MatrixXcd out(ctx.dim, ctx.dim);
    rhs(0.9, rho, out);
    CHECK(std::abs(out.trace()) < 1e-13 * out.norm());
}

TEST_CASE("vanishing rates leave a purity-conserving commutator flow") {
    Eigen::MatrixXcd h(2, 2), l(2, 2);
    h << 0.3, 0.7, 0.7, -0.3;
    l << 0.0, 1.0, 1.0, 0.0;
    auto system = bath::make_system(h, l);
    bath::BathModel model;
    model.modes.push_back(bath::make_mode(1e-12, bath::StationaryCoeff{1e-6, 0.0},
                                          bath::StationaryCoeff{1e-6, 0.0}));
    auto basis = FockBasis::build(TruncationScheme::rectangular({3}));
    auto ctx = HierarchyContext::make(system, model, basis);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(ctx.dim, ctx.dim);
    rho(0, 0) = 1.0; // |e><e| ⊗ vacuum
    PmeRhs rhs(ctx);

    auto purity_change = [&](double h_step) {
        Eigen::MatrixXcd r = rho;
        Rk4Stepper<Eigen::MatrixXcd> stepper(r);
        stepper.step(rhs, 0.0, h_step, r);
        return std::abs((r * r).trace().real() - 1.0);
    };
    const double d1 = purity_change(0.2);
    const double d2 = purity_change(0.1);
    CHECK(d1 < 1e-4);
    CHECK(d1 / d2 > 20.0); // local error is O(h^5)
}

TEST_CASE("pseudomode forms reject incompatible models") {
    const auto model = bath::dpa_three_mode(1.0, 5.0, 2.0, 1.0, 0.5, pi);
    const auto ctx = make_ctx(model, 2);
    CHECK_THROWS_AS((void)PmeRhs(ctx), ModelDomainError);
    CHECK_THROWS_AS((void)PsseRhs(ctx, false), ModelDomainError);
}

TEST_CASE("white-noise unraveling shift vanishes on vacuum support") {
    const auto ctx = make_ctx(bath::single_mode_squeezed(1.0, 5.0, 1.0, 0.0, 0.5), 5);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(ctx.dim);
    psi.head(2) = tls_initial();
    PsseRhs lin(ctx, false), nl(ctx, true);
    Eigen::VectorXcd a(ctx.dim), b(ctx.dim);
    lin(0.0, psi, a);
    nl(0.0, psi, b);
    CHECK((a - b).norm() < 1e-15);
}

TEST_CASE("non-finite states abort with a numerical error") {
    // step size of 1 makes the damped hierarchy wildly unstable
    auto spec = tls_spec(sim::Method::Hme, bath::single_mode_squeezed(1.0, 5.0, 1.5, 0.0, 1.0), 6,
                         300.0, 300, 300, 0, 0);
    CHECK_THROWS_AS((void)sim::run_deterministic(spec), NumericalError);
}

TEST_CASE("hierarchy and pseudomode master equations agree after reduction") {
    const auto model = bath::single_mode_squeezed(1.0, 5.0, 1.5, 0.0, 1.0);
    auto spec = tls_spec(sim::Method::Hme, model, 50, 2.0, 2000, 100, 0, 0);
    const auto hme = sim::run_deterministic(spec);
    spec.method = sim::Method::Pme;
    const auto pme = sim::run_deterministic(spec);
    double worst = 0.0;
    for (std::size_t i = 0; i < hme.rho.size(); ++i)
        worst = std::max(worst, (hme.rho[i] - pme.rho[i]).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-8);
}

TEST_CASE("linear and normalized ensembles give the same reduced state") {
    const auto model = bath::single_mode_squeezed(1.0, 5.0, 1.0, 0.0, 1.0);
    auto spec = tls_spec(sim::Method::HopsLinear, model, 8, 2.0, 2000, 50, 1200, 101);
    const auto lin = sim::run_stochastic(spec);
    spec.method = sim::Method::HopsNonlinear;
    spec.seed = 202; // independent ensembles
    const auto nl = sim::run_stochastic(spec);
    CHECK(lin.discarded == 0);
    CHECK(nl.discarded == 0);

    long total = 0, ok = 0;
    for (std::size_t ti = 0; ti < lin.times.size(); ++ti)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double se = std::hypot(lin.rho_se[ti](i, j), nl.rho_se[ti](i, j));
                const double diff = std::abs(lin.rho[ti](i, j) - nl.rho[ti](i, j));
                ++total;
                if (diff <= std::max(6.0 * se, 1e-9)) ++ok;
            }
    CHECK(static_cast<double>(ok) / static_cast<double>(total) > 0.97);
}

TEST_CASE("linear ensemble keeps unit trace on average") {
    const auto model = bath::single_mode_squeezed(1.0, 5.0, 1.0, 0.0, 1.0);
    const auto spec = tls_spec(sim::Method::HopsLinear, model, 8, 2.0, 2000, 20, 600, 7);
    const auto res = sim::run_stochastic(spec);
    const auto& last = res.rho.back();
    const double tr = (last(0, 0) + last(1, 1)).real();
    const double se = std::hypot(res.rho_se.back()(0, 0), res.rho_se.back()(1, 1));
    CHECK(std::abs(tr - 1.0) < std::max(6.0 * se, 1e-3));
}

TEST_CASE("white-noise trajectories reproduce the pseudomode master equation") {
    const auto model = bath::single_mode_squeezed(1.0, 5.0, 1.0, 0.0, 0.5);
    auto spec = tls_spec(sim::Method::PsseNonlinear, model, 8, 2.0, 2000, 50, 1500, 11);
    const auto traj = sim::run_stochastic(spec);
    auto det = tls_spec(sim::Method::Pme, model, 20, 2.0, 2000, 50, 0, 0);
    const auto ref = sim::run_deterministic(det);
    long total = 0, ok = 0;
    for (std::size_t ti = 0; ti < ref.times.size(); ++ti)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double se = traj.rho_se[ti](i, j);
                const double diff = std::abs(traj.rho[ti](i, j) - ref.rho[ti](i, j));
                ++total;
                if (diff <= std::max(6.0 * se, 1e-9)) ++ok;
            }
    CHECK(static_cast<double>(ok) / static_cast<double>(total) > 0.97);
}

TEST_CASE("trajectories of the r = 0 model are bit-identical to the stationary model") {
    const double gamma = 0.8, omega0 = 5.0, rate = 1.2;
    auto squeezed = tls_spec(sim::Method::HopsNonlinear,
                             bath::single_mode_squeezed(gamma, omega0, 0.0, 0.0, rate), 6, 1.0,
                             500, 50, 3, 77);
    auto stationary = tls_spec(sim::Method::HopsNonlinear,
                               bath::stationary_multimode({{cplx(gamma, 0.0), omega0, rate}}), 6,
                               1.0, 500, 50, 3, 77);
    const auto a = sim::run_stochastic(squeezed);
    const auto b = sim::run_stochastic(stationary);
    for (std::size_t ti = 0; ti < a.times.size(); ++ti)
        CHECK((a.rho[ti] - b.rho[ti]).norm() == 0.0);
}
