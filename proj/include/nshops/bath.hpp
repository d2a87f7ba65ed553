// bath.hpp — time-dependent correlation-function models: per-mode
// coefficient functions, exponential kernels, benchmark bath builders,
// and the displaced-squeezed-thermal embedding.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace nshops::bath {

using cplx = std::complex<double>;

// ---- per-mode time coefficients -------------------------------------------

// amp * exp(-i freq t)
struct StationaryCoeff {
    cplx amp;
    double freq = 0.0;
};

// sqrt(coupling or conj(coupling)) * {u e^{-i(w0 t - phi/2)} - v e^{+i(w0 t - phi/2)}} e^{-i detuning t}
// with u = cosh(squeeze), v = sinh(squeeze).
struct SqueezedCoeff {
    cplx coupling;
    double center = 0.0;
    double squeeze = 0.0;
    double phase = 0.0;
    double detuning = 0.0;
    bool conj_amp = false;
    double u = 1.0, v = 0.0; // cached hyperbolics
};

SqueezedCoeff make_squeezed(cplx coupling, double center, double squeeze, double phase,
                            double detuning = 0.0, bool conj_amp = false);

// prefactor * cos(center t - phase/2) or * sin(center t - phase/2)
struct HarmonicCoeff {
    enum class Kind { Cos, Sin };
    double prefactor = 0.0;
    Kind kind = Kind::Cos;
    double center = 0.0;
    double phase = 0.0;
};

// Linear interpolation on a strictly increasing grid; evaluation outside
// the tabulated window is an error.
struct TabulatedCoeff {
    std::shared_ptr<const std::vector<double>> times;
    std::shared_ptr<const std::vector<cplx>> values;
};

TabulatedCoeff make_tabulated(std::vector<double> times, std::vector<cplx> values);

using TimeCoefficient = std::variant<StationaryCoeff, SqueezedCoeff, HarmonicCoeff, TabulatedCoeff>;

cplx eval(const TimeCoefficient& c, double t);
bool coefficients_equal(const TimeCoefficient& f, const TimeCoefficient& g);

// ---- bath model ------------------------------------------------------------

struct BathMode {
    double gamma_rate = 1.0; // spectral half-width, inverse memory time
    TimeCoefficient f;
    TimeCoefficient g;
    bool pseudomode_ok = false; // true iff f == g
};

BathMode make_mode(double gamma_rate, TimeCoefficient f, TimeCoefficient g);

// Classical drive term: contributes 2 Re(g(t) * alpha) to the real drive.
struct DriveTerm {
    TimeCoefficient g;
    cplx alpha;
};

// Thermal fluctuation term: contributes 2 nbar Re(g(t) g*(s)) to the
// covariance of the real noise Y(t).
struct ThermalTerm {
    TimeCoefficient g;
    double nbar = 0.0;
};

struct BathModel {
    std::vector<BathMode> modes;
    std::vector<DriveTerm> drive;
    std::vector<ThermalTerm> thermal;

    int mode_count() const { return static_cast<int>(modes.size()); }
    bool pseudomode_ok() const;
    bool has_drive() const { return !drive.empty(); }
    bool has_thermal() const { return !thermal.empty(); }

    double drive_value(double t) const;
    double thermal_cov(double t, double s) const;
};

// (Gamma/2) e^{-Gamma |tau|}
double kernel(double gamma_rate, double tau);

// alpha(t, s) = sum_j kernel(Gamma_j, t - s) f_j(t) conj(g_j(s))
cplx eval_bcf(const BathModel& model, double t, double s);

// ---- benchmark builders ----------------------------------------------------

// Uniformly squeezed single-exponential bath: one mode with f = g.
BathModel single_mode_squeezed(double gamma, double omega0, double r, double phi,
                               double gamma_rate);

// Degenerate-parametric-amplifier output field: three modes with rates
// {Gamma0, Gamma - eps, Gamma + eps}; the third mode has g = -f, so the
// pseudomode representation does not apply. Valid for eps < Gamma (below
// threshold) and Gamma0 > Gamma + eps.
BathModel dpa_three_mode(double gamma, double omega0, double gamma0, double gamma_c,
                         double eps, double phi);

// Bogoliubov coefficients of the first DPA mode; u^2 - v^2 = 1.
struct Bogoliubov {
    double u = 1.0, v = 0.0;
};
Bogoliubov dpa_bogoliubov(double gamma0, double gamma_c, double eps);

// arccosh(Gamma / sqrt(Gamma^2 - eps^2))
double effective_squeezing(double gamma_c, double eps);

struct UniformTerm {
    cplx gamma;   // complex weight of the stationary expansion
    double omega; // mode frequency
    double gamma_rate;
};

// Uniformly squeezed multimode bath; modes are detuned by omega_j - omega0.
// A mode is pseudomode-compatible iff its gamma is real and non-negative.
BathModel uniform_squeezed_multimode(const std::vector<UniformTerm>& terms, double r, double phi,
                                     double omega0);

// Stationary exponential expansion (the r = 0 family).
BathModel stationary_multimode(const std::vector<UniformTerm>& terms);

// ---- displaced squeezed thermal embedding ----------------------------------

struct EmbeddingInput {
    TimeCoefficient coupling; // dressed coupling g_lambda(t)
    double nbar = 0.0;        // thermal occupation
    cplx displacement = 0.0;  // coherent displacement alpha_lambda
};

struct Embedding {
    std::vector<DriveTerm> drive;      // B(t) = sum 2 Re(g(t) alpha)
    std::vector<ThermalTerm> thermal;  // E[Y(t)Y(s)] = sum 2 nbar Re(g(t) g*(s))
    std::vector<TimeCoefficient> bcf_terms;

    double drive_value(double t) const;
    double thermal_cov(double t, double s) const;
    cplx bcf(double t, double s) const; // sum g(t) g*(s)
};

Embedding thermal_embedding(const std::vector<EmbeddingInput>& modes);

// ---- system ----------------------------------------------------------------

struct SystemModel {
    int dim = 0;
    Eigen::MatrixXcd hamiltonian;
    Eigen::MatrixXcd coupling;
};

// Validates Hermiticity of both operators to 1e-12.
SystemModel make_system(Eigen::MatrixXcd hamiltonian, Eigen::MatrixXcd coupling);

} // namespace nshops::bath
