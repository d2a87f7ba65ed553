// dynamics.hpp — right-hand sides of the four dynamical formulations and
// the fixed-step hybrid integrator (RK4 drift, post-step noise insertion).

#pragma once

#include "nshops/bath.hpp"
#include "nshops/fock.hpp"

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <memory>
#include <vector>

namespace nshops::dynamics {

using cplx = std::complex<double>;
using fock::FockBasis;

// Squared vacuum-norm threshold below which a trajectory is degenerate.
constexpr double degenerate_norm2 = 1e-60;

// Shared, immutable evaluation context for one (system, bath, basis) triple.
struct HierarchyContext {
    bath::SystemModel system;
    bath::BathModel bath_model;
    std::shared_ptr<const FockBasis> basis;

    Eigen::VectorXd damping;             // per extended index: sum_j Gamma_j n_j
    std::vector<double> coupling_factor; // sqrt(Gamma_j / 2)
    Eigen::Index dim = 0;                // sys_dim * basis size

    static HierarchyContext make(bath::SystemModel system, bath::BathModel model,
                                 std::shared_ptr<const FockBasis> basis);
};

// One-slot cache of per-time coefficient evaluations; RK4 hits the step
// midpoint twice.
struct CoeffCache {
    double at = std::numeric_limits<double>::quiet_NaN();
    std::vector<cplx> f, g;
    double drive = 0.0;
    void refresh(const HierarchyContext& ctx, double t);
};

// out = H_eff(t) x: system Hamiltonian, mode couplings, classical drive.
void apply_effective_hamiltonian(const HierarchyContext& ctx, double t,
                                 const Eigen::VectorXcd& x, Eigen::VectorXcd& out);

// Normalized expectation value of the coupling operator on the vacuum
// projection; throws DegenerateTrajectory on vacuum-norm underflow.
double girsanov_expectation(const HierarchyContext& ctx, Eigen::Ref<const Eigen::VectorXcd> psi);

// dm_j/dt = -Gamma_j m_j + (Gamma_j/2) conj(g_j(t)) L_val. The shifted-noise
// drift is then conj(sum_j f_j(t) m_j(t)) L.
void memory_derivative(const HierarchyContext& ctx, double t, double l_val,
                       const Eigen::VectorXcd& m, Eigen::VectorXcd& dm);

// ---- drift functors (own their workspaces; one instance per worker) --------
//
// Each functor exposes `step_drive`, the per-step constant the stochastic
// driver uses to inject thermal noise Y into the effective Hamiltonian.

class HopsLinearRhs {
public:
    explicit HopsLinearRhs(const HierarchyContext& ctx);
    void operator()(double t, const Eigen::VectorXcd& psi, Eigen::VectorXcd& out);
    double step_drive = 0.0;

private:
    const HierarchyContext& ctx_;
    CoeffCache coeff_;
    Eigen::VectorXcd w_;
};

// State layout: [psi (dim); m (one complex per mode)].
class HopsNonlinearRhs {
public:
    explicit HopsNonlinearRhs(const HierarchyContext& ctx);
    void operator()(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& out);
    double step_drive = 0.0;

private:
    const HierarchyContext& ctx_;
    CoeffCache coeff_;
    Eigen::VectorXcd w_;
};

class PsseRhs {
public:
    PsseRhs(const HierarchyContext& ctx, bool nonlinear);
    void operator()(double t, const Eigen::VectorXcd& psi, Eigen::VectorXcd& out);
    double step_drive = 0.0;

private:
    const HierarchyContext& ctx_;
    bool nonlinear_;
    CoeffCache coeff_;
    Eigen::VectorXcd w_, u_;
};

class HmeRhs {
public:
    explicit HmeRhs(const HierarchyContext& ctx);
    void operator()(double t, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out);

private:
    const HierarchyContext& ctx_;
    CoeffCache coeff_;
    Eigen::MatrixXcd w1_, w2_;
};

// Requires a pseudomode-compatible model (Hermitian effective Hamiltonian).
class PmeRhs {
public:
    explicit PmeRhs(const HierarchyContext& ctx);
    void operator()(double t, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out);

private:
    const HierarchyContext& ctx_;
    CoeffCache coeff_;
    Eigen::MatrixXcd w1_, w2_;
};

// ---- noise insertions (Euler-Maruyama, applied once per step) --------------

// psi += -i conj(Z) h (L ⊗ I) psi_start
void add_hops_noise(const HierarchyContext& ctx, cplx z_value, double h,
                    Eigen::Ref<const Eigen::VectorXcd> psi_start, Eigen::Ref<Eigen::VectorXcd> psi);

// psi += sum_j sqrt(2 Gamma_j) conj(dW_j) c_j psi_start
void add_psse_noise(const HierarchyContext& ctx, const std::vector<cplx>& dw,
                    Eigen::Ref<const Eigen::VectorXcd> psi_start, Eigen::Ref<Eigen::VectorXcd> psi);

// ---- integrator --------------------------------------------------------------

// Classical RK4 step; State is an Eigen vector or matrix type.
template <class State>
class Rk4Stepper {
public:
    explicit Rk4Stepper(const State& prototype)
        : k1_(prototype), k2_(prototype), k3_(prototype), k4_(prototype), tmp_(prototype) {}

    template <class Rhs>
    void step(Rhs& rhs, double t, double h, State& y) {
        rhs(t, y, k1_);
        tmp_ = y + (0.5 * h) * k1_;
        rhs(t + 0.5 * h, tmp_, k2_);
        tmp_ = y + (0.5 * h) * k2_;
        rhs(t + 0.5 * h, tmp_, k3_);
        tmp_ = y + h * k3_;
        rhs(t + h, tmp_, k4_);
        y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    State k1_, k2_, k3_, k4_, tmp_;
};

// ---- ladder and system-operator actions on extended densities ---------------

void set_system_left(const FockBasis& b, const Eigen::MatrixXcd& op, const Eigen::MatrixXcd& x,
                     Eigen::MatrixXcd& out);
void set_system_right(const FockBasis& b, const Eigen::MatrixXcd& op, const Eigen::MatrixXcd& x,
                      Eigen::MatrixXcd& out);
void add_system_left(const FockBasis& b, cplx alpha, const Eigen::MatrixXcd& op,
                     const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out);
void add_system_right(const FockBasis& b, cplx alpha, const Eigen::MatrixXcd& op,
                      const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out);
void add_lowering_left(const FockBasis& b, int ds, int mode, cplx alpha,
                       const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out);
void add_raising_left(const FockBasis& b, int ds, int mode, cplx alpha, const Eigen::MatrixXcd& x,
                      Eigen::MatrixXcd& out);
void add_lowering_right(const FockBasis& b, int ds, int mode, cplx alpha,
                        const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out);
void add_raising_right(const FockBasis& b, int ds, int mode, cplx alpha,
                       const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out);
// out += alpha * c_j x c_j†
void add_sandwich(const FockBasis& b, int ds, int mode, cplx alpha, const Eigen::MatrixXcd& x,
                  Eigen::MatrixXcd& out);

} // namespace nshops::dynamics
