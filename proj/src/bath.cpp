#include "nshops/bath.hpp"

#include "nshops/exceptions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nshops::bath {

namespace {
constexpr double hermiticity_tol = 1e-12;

inline cplx phase_factor(double theta) { return std::polar(1.0, -theta); }
} // namespace

SqueezedCoeff make_squeezed(cplx coupling, double center, double squeeze, double phase,
                            double detuning, bool conj_amp) {
    if (squeeze < 0.0) throw ModelDomainError("squeeze parameter r must be >= 0");
    SqueezedCoeff c;
    c.coupling = coupling;
    c.center = center;
    c.squeeze = squeeze;
    c.phase = phase;
    c.detuning = detuning;
    c.conj_amp = conj_amp;
    c.u = std::cosh(squeeze);
    c.v = std::sinh(squeeze);
    return c;
}

TabulatedCoeff make_tabulated(std::vector<double> times, std::vector<cplx> values) {
    if (times.size() != values.size() || times.size() < 2)
        throw ModelDomainError("tabulated coefficient needs matching grids of length >= 2");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw ModelDomainError("tabulated coefficient grid must be strictly increasing");
    TabulatedCoeff c;
    c.times = std::make_shared<const std::vector<double>>(std::move(times));
    c.values = std::make_shared<const std::vector<cplx>>(std::move(values));
    return c;
}

cplx eval(const TimeCoefficient& coeff, double t) {
    return std::visit(
        [t](const auto& c) -> cplx {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, StationaryCoeff>) {
                return c.amp * phase_factor(c.freq * t);
            } else if constexpr (std::is_same_v<T, SqueezedCoeff>) {
                const cplx amp = std::sqrt(c.conj_amp ? std::conj(c.coupling) : c.coupling);
                const cplx w = phase_factor(c.center * t - 0.5 * c.phase);
                cplx val = amp * (c.u * w - c.v * std::conj(w));
                if (c.detuning != 0.0) val *= phase_factor(c.detuning * t);
                return val;
            } else if constexpr (std::is_same_v<T, HarmonicCoeff>) {
                const double th = c.center * t - 0.5 * c.phase;
                return c.kind == HarmonicCoeff::Kind::Cos ? cplx(c.prefactor * std::cos(th), 0.0)
                                                          : cplx(c.prefactor * std::sin(th), 0.0);
            } else {
                const auto& ts = *c.times;
                const auto& vs = *c.values;
                if (t < ts.front() - 1e-12 || t > ts.back() + 1e-12)
                    throw ModelDomainError("tabulated coefficient evaluated outside its window");
                if (t <= ts.front()) return vs.front();
                if (t >= ts.back()) return vs.back();
                const auto it = std::upper_bound(ts.begin(), ts.end(), t);
                const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
                const double w = (t - ts[hi - 1]) / (ts[hi] - ts[hi - 1]);
                return vs[hi - 1] + w * (vs[hi] - vs[hi - 1]);
            }
        },
        coeff);
}

bool coefficients_equal(const TimeCoefficient& f, const TimeCoefficient& g) {
    if (f.index() != g.index()) return false;
    if (const auto* a = std::get_if<StationaryCoeff>(&f)) {
        const auto& b = std::get<StationaryCoeff>(g);
        return a->amp == b.amp && a->freq == b.freq;
    }
    if (const auto* a = std::get_if<SqueezedCoeff>(&f)) {
        const auto& b = std::get<SqueezedCoeff>(g);
        const bool same_amp = (a->conj_amp == b.conj_amp && a->coupling == b.coupling) ||
                              (a->conj_amp != b.conj_amp && a->coupling == b.coupling &&
                               a->coupling.imag() == 0.0);
        return same_amp && a->center == b.center && a->squeeze == b.squeeze &&
               a->phase == b.phase && a->detuning == b.detuning;
    }
    if (const auto* a = std::get_if<HarmonicCoeff>(&f)) {
        const auto& b = std::get<HarmonicCoeff>(g);
        return a->prefactor == b.prefactor && a->kind == b.kind && a->center == b.center &&
               a->phase == b.phase;
    }
    const auto& a = std::get<TabulatedCoeff>(f);
    const auto& b = std::get<TabulatedCoeff>(g);
    return *a.times == *b.times && *a.values == *b.values;
}

BathMode make_mode(double gamma_rate, TimeCoefficient f, TimeCoefficient g) {
    if (!(gamma_rate > 0.0)) throw ModelDomainError("mode rate Gamma must be > 0");
    BathMode m;
    m.gamma_rate = gamma_rate;
    m.pseudomode_ok = coefficients_equal(f, g);
    m.f = std::move(f);
    m.g = std::move(g);
    return m;
}

bool BathModel::pseudomode_ok() const {
    for (const auto& m : modes)
        if (!m.pseudomode_ok) return false;
    return true;
}

double BathModel::drive_value(double t) const {
    double out = 0.0;
    for (const auto& d : drive) out += 2.0 * std::real(eval(d.g, t) * d.alpha);
    return out;
}

double BathModel::thermal_cov(double t, double s) const {
    double out = 0.0;
    for (const auto& th : thermal)
        out += 2.0 * th.nbar * std::real(eval(th.g, t) * std::conj(eval(th.g, s)));
    return out;
}

double kernel(double gamma_rate, double tau) {
    if (!(gamma_rate > 0.0)) throw ModelDomainError("kernel rate Gamma must be > 0");
    return 0.5 * gamma_rate * std::exp(-gamma_rate * std::abs(tau));
}

cplx eval_bcf(const BathModel& model, double t, double s) {
    cplx acc = 0.0;
    for (const auto& m : model.modes)
        acc += kernel(m.gamma_rate, t - s) * eval(m.f, t) * std::conj(eval(m.g, s));
    return acc;
}

BathModel single_mode_squeezed(double gamma, double omega0, double r, double phi,
                               double gamma_rate) {
    if (gamma < 0.0) throw ModelDomainError("coupling strength gamma must be >= 0");
    if (r < 0.0) throw ModelDomainError("squeeze parameter r must be >= 0");
    const auto f = make_squeezed(cplx(gamma, 0.0), omega0, r, phi, 0.0, false);
    const auto g = make_squeezed(cplx(gamma, 0.0), omega0, r, phi, 0.0, true);
    BathModel model;
    model.modes.push_back(make_mode(gamma_rate, f, g));
    return model;
}

Bogoliubov dpa_bogoliubov(double gamma0, double gamma_c, double eps) {
    const double gp = gamma_c + eps, gm = gamma_c - eps;
    const double den = std::sqrt((gamma0 * gamma0 - gp * gp) * (gamma0 * gamma0 - gm * gm));
    Bogoliubov b;
    b.u = (gamma0 * gamma0 - gamma_c * gamma_c - eps * eps) / den;
    b.v = 2.0 * gamma_c * eps / den;
    return b;
}

BathModel dpa_three_mode(double gamma, double omega0, double gamma0, double gamma_c, double eps,
                         double phi) {
    if (gamma < 0.0) throw ModelDomainError("coupling strength gamma must be >= 0");
    if (!(eps > 0.0)) throw ModelDomainError("pump amplitude eps must be > 0");
    if (!(eps < gamma_c))
        throw ModelDomainError("below-threshold condition violated: requires eps < Gamma");
    if (!(gamma0 > gamma_c + eps))
        throw ModelDomainError("input bandwidth condition violated: requires Gamma0 > Gamma + eps");

    const double gp = gamma_c + eps, gm = gamma_c - eps;
    const auto [u, v] = dpa_bogoliubov(gamma0, gamma_c, eps);
    // Same structure as the single-mode model; recover r from v = sinh(r).
    const auto f1 = make_squeezed(cplx(gamma, 0.0), omega0, std::asinh(v), phi);

    const double p2 = std::sqrt(4.0 * gamma * gamma_c * eps / (gm * gm) * gamma0 * gamma0 /
                                (gamma0 * gamma0 - gm * gm));
    const double p3 = std::sqrt(4.0 * gamma * gamma_c * eps / (gp * gp) * gamma0 * gamma0 /
                                (gamma0 * gamma0 - gp * gp));
    HarmonicCoeff f2{p2, HarmonicCoeff::Kind::Cos, omega0, phi};
    HarmonicCoeff f3{p3, HarmonicCoeff::Kind::Sin, omega0, phi};
    HarmonicCoeff g3{-p3, HarmonicCoeff::Kind::Sin, omega0, phi};

    BathModel model;
    model.modes.push_back(make_mode(gamma0, f1, f1));
    model.modes.push_back(make_mode(gm, f2, f2));
    model.modes.push_back(make_mode(gp, f3, g3));
    return model;
}

double effective_squeezing(double gamma_c, double eps) {
    if (!(gamma_c > 0.0) || eps < 0.0 || !(eps < gamma_c))
        throw ModelDomainError("effective squeezing requires 0 <= eps < Gamma");
    return std::acosh(gamma_c / std::sqrt(gamma_c * gamma_c - eps * eps));
}

BathModel uniform_squeezed_multimode(const std::vector<UniformTerm>& terms, double r, double phi,
                                     double omega0) {
    if (terms.empty()) throw ModelDomainError("multimode bath needs at least one term");
    if (r < 0.0) throw ModelDomainError("squeeze parameter r must be >= 0");
    BathModel model;
    for (const auto& term : terms) {
        const double detuning = term.omega - omega0;
        auto f = make_squeezed(term.gamma, omega0, r, phi, detuning, false);
        auto g = make_squeezed(term.gamma, omega0, r, phi, detuning, true);
        model.modes.push_back(make_mode(term.gamma_rate, std::move(f), std::move(g)));
    }
    return model;
}

BathModel stationary_multimode(const std::vector<UniformTerm>& terms) {
    if (terms.empty()) throw ModelDomainError("multimode bath needs at least one term");
    BathModel model;
    for (const auto& term : terms) {
        StationaryCoeff f{std::sqrt(term.gamma), term.omega};
        StationaryCoeff g{std::sqrt(std::conj(term.gamma)), term.omega};
        model.modes.push_back(make_mode(term.gamma_rate, f, g));
    }
    return model;
}

double Embedding::drive_value(double t) const {
    double out = 0.0;
    for (const auto& d : drive) out += 2.0 * std::real(eval(d.g, t) * d.alpha);
    return out;
}

double Embedding::thermal_cov(double t, double s) const {
    double out = 0.0;
    for (const auto& th : thermal)
        out += 2.0 * th.nbar * std::real(eval(th.g, t) * std::conj(eval(th.g, s)));
    return out;
}

cplx Embedding::bcf(double t, double s) const {
    cplx acc = 0.0;
    for (const auto& g : bcf_terms) acc += eval(g, t) * std::conj(eval(g, s));
    return acc;
}

Embedding thermal_embedding(const std::vector<EmbeddingInput>& modes) {
    Embedding e;
    for (const auto& m : modes) {
        if (m.nbar < 0.0) throw ModelDomainError("thermal occupation nbar must be >= 0");
        if (m.displacement != 0.0) e.drive.push_back(DriveTerm{m.coupling, m.displacement});
        if (m.nbar > 0.0) e.thermal.push_back(ThermalTerm{m.coupling, m.nbar});
        e.bcf_terms.push_back(m.coupling);
    }
    return e;
}

SystemModel make_system(Eigen::MatrixXcd hamiltonian, Eigen::MatrixXcd coupling) {
    if (hamiltonian.rows() != hamiltonian.cols() || coupling.rows() != coupling.cols() ||
        hamiltonian.rows() != coupling.rows() || hamiltonian.rows() < 1)
        throw ModelDomainError("system operators must be square matrices of equal dimension");
    const double scale_h = std::max(1.0, hamiltonian.cwiseAbs().maxCoeff());
    const double scale_l = std::max(1.0, coupling.cwiseAbs().maxCoeff());
    if ((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() > hermiticity_tol * scale_h)
        throw ModelDomainError("system Hamiltonian is not Hermitian within 1e-12");
    if ((coupling - coupling.adjoint()).cwiseAbs().maxCoeff() > hermiticity_tol * scale_l)
        throw ModelDomainError("coupling operator is not Hermitian within 1e-12");
    SystemModel s;
    s.dim = static_cast<int>(hamiltonian.rows());
    s.hamiltonian = std::move(hamiltonian);
    s.coupling = std::move(coupling);
    return s;
}

} // namespace nshops::bath
