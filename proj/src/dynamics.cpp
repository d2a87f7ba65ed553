#include "nshops/dynamics.hpp"

#include "nshops/exceptions.hpp"

#include <cmath>

namespace nshops::dynamics {

namespace {
constexpr cplx I{0.0, 1.0};
} // namespace

HierarchyContext HierarchyContext::make(bath::SystemModel system, bath::BathModel model,
                                        std::shared_ptr<const FockBasis> basis) {
    if (basis->mode_count() != model.mode_count())
        throw ModelDomainError("basis mode count does not match the bath model");
    HierarchyContext ctx;
    ctx.dim = static_cast<Eigen::Index>(basis->size()) * system.dim;
    ctx.damping.resize(ctx.dim);
    for (std::size_t k = 0; k < basis->size(); ++k) {
        double sum = 0.0;
        for (int j = 0; j < model.mode_count(); ++j)
            sum += model.modes[static_cast<std::size_t>(j)].gamma_rate * basis->occupation(k, j);
        for (int s = 0; s < system.dim; ++s)
            ctx.damping(static_cast<Eigen::Index>(k) * system.dim + s) = sum;
    }
    for (const auto& m : model.modes) ctx.coupling_factor.push_back(std::sqrt(0.5 * m.gamma_rate));
    ctx.system = std::move(system);
    ctx.bath_model = std::move(model);
    ctx.basis = std::move(basis);
    return ctx;
}

void CoeffCache::refresh(const HierarchyContext& ctx, double t) {
    if (t == at) return;
    const int n = ctx.bath_model.mode_count();
    f.resize(n);
    g.resize(n);
    for (int j = 0; j < n; ++j) {
        const auto& mode = ctx.bath_model.modes[static_cast<std::size_t>(j)];
        f[static_cast<std::size_t>(j)] = bath::eval(mode.f, t);
        g[static_cast<std::size_t>(j)] = bath::eval(mode.g, t);
    }
    drive = ctx.bath_model.has_drive() ? ctx.bath_model.drive_value(t) : 0.0;
    at = t;
}

// ---- vector kernels ---------------------------------------------------------

namespace {

void vec_add_lowering(const FockBasis& b, int ds, int mode, cplx alpha, const cplx* x, cplx* out) {
    const std::size_t nb = b.size();
    for (std::size_t k = 0; k < nb; ++k) {
        const std::int64_t k2 = b.raise_index(mode, k);
        if (k2 < 0) continue;
        const cplx w = alpha * b.raise_factor(mode, k);
        const cplx* sb = x + static_cast<std::size_t>(k2) * ds;
        cplx* db = out + k * ds;
        for (int s = 0; s < ds; ++s) db[s] += w * sb[s];
    }
}

void vec_add_raising(const FockBasis& b, int ds, int mode, cplx alpha, const cplx* x, cplx* out) {
    const std::size_t nb = b.size();
    for (std::size_t k = 0; k < nb; ++k) {
        const std::int64_t k2 = b.lower_index(mode, k);
        if (k2 < 0) continue;
        const cplx w = alpha * b.lower_factor(mode, k);
        const cplx* sb = x + static_cast<std::size_t>(k2) * ds;
        cplx* db = out + k * ds;
        for (int s = 0; s < ds; ++s) db[s] += w * sb[s];
    }
}

void vec_set_system(const FockBasis& b, const Eigen::MatrixXcd& op, const cplx* x, cplx* out) {
    const int ds = static_cast<int>(op.rows());
    const std::size_t nb = b.size();
    for (std::size_t k = 0; k < nb; ++k) {
        const cplx* sb = x + k * ds;
        cplx* db = out + k * ds;
        for (int r = 0; r < ds; ++r) {
            cplx acc = 0.0;
            for (int c = 0; c < ds; ++c) acc += op(r, c) * sb[c];
            db[r] = acc;
        }
    }
}

void vec_add_system(const FockBasis& b, cplx alpha, const Eigen::MatrixXcd& op, const cplx* x,
                    cplx* out) {
    const int ds = static_cast<int>(op.rows());
    const std::size_t nb = b.size();
    for (std::size_t k = 0; k < nb; ++k) {
        const cplx* sb = x + k * ds;
        cplx* db = out + k * ds;
        for (int r = 0; r < ds; ++r) {
            cplx acc = 0.0;
            for (int c = 0; c < ds; ++c) acc += op(r, c) * sb[c];
            db[r] += alpha * acc;
        }
    }
}

// Shared drift core: out = -damping y - i H_eff(t) y on the first `dim`
// entries, with w receiving (L ⊗ I) y for reuse by the caller.
void hierarchy_drift_core(const HierarchyContext& ctx, const CoeffCache& coeff, double step_drive,
                          const cplx* y, cplx* out, Eigen::VectorXcd& w) {
    const Eigen::Index dim = ctx.dim;
    const double* damp = ctx.damping.data();
    for (Eigen::Index i = 0; i < dim; ++i) out[i] = -damp[i] * y[i];
    vec_set_system(*ctx.basis, ctx.system.coupling, y, w.data());
    vec_add_system(*ctx.basis, -I, ctx.system.hamiltonian, y, out);
    const int n = ctx.bath_model.mode_count();
    const int ds = ctx.system.dim;
    for (int j = 0; j < n; ++j) {
        const double xf = ctx.coupling_factor[static_cast<std::size_t>(j)];
        vec_add_lowering(*ctx.basis, ds, j, -I * xf * coeff.f[static_cast<std::size_t>(j)],
                         w.data(), out);
        vec_add_raising(*ctx.basis, ds, j,
                        -I * xf * std::conj(coeff.g[static_cast<std::size_t>(j)]), w.data(), out);
    }
    const double c = coeff.drive + step_drive;
    if (c != 0.0) {
        const cplx a = -I * c;
        const cplx* ws = w.data();
        for (Eigen::Index i = 0; i < dim; ++i) out[i] += a * ws[i];
    }
}

double girsanov_core(const HierarchyContext& ctx, const cplx* psi) {
    const int ds = ctx.system.dim;
    double nrm2 = 0.0;
    for (int s = 0; s < ds; ++s) nrm2 += std::norm(psi[s]);
    if (nrm2 < degenerate_norm2)
        throw DegenerateTrajectory("vacuum-projection norm underflow in the normalized "
                                   "coupling expectation");
    cplx acc = 0.0;
    for (int r = 0; r < ds; ++r) {
        cplx row = 0.0;
        for (int c = 0; c < ds; ++c) row += ctx.system.coupling(r, c) * psi[c];
        acc += std::conj(psi[r]) * row;
    }
    return acc.real() / nrm2;
}

} // namespace

void apply_effective_hamiltonian(const HierarchyContext& ctx, double t, const Eigen::VectorXcd& x,
                                 Eigen::VectorXcd& out) {
    CoeffCache coeff;
    coeff.refresh(ctx, t);
    out.setZero(ctx.dim);
    Eigen::VectorXcd w(ctx.dim);
    vec_set_system(*ctx.basis, ctx.system.coupling, x.data(), w.data());
    vec_add_system(*ctx.basis, 1.0, ctx.system.hamiltonian, x.data(), out.data());
    const int ds = ctx.system.dim;
    for (int j = 0; j < ctx.bath_model.mode_count(); ++j) {
        const double xf = ctx.coupling_factor[static_cast<std::size_t>(j)];
        vec_add_lowering(*ctx.basis, ds, j, xf * coeff.f[static_cast<std::size_t>(j)], w.data(),
                         out.data());
        vec_add_raising(*ctx.basis, ds, j, xf * std::conj(coeff.g[static_cast<std::size_t>(j)]),
                        w.data(), out.data());
    }
    if (coeff.drive != 0.0) out += coeff.drive * w;
}

double girsanov_expectation(const HierarchyContext& ctx, Eigen::Ref<const Eigen::VectorXcd> psi) {
    return girsanov_core(ctx, psi.data());
}

void memory_derivative(const HierarchyContext& ctx, double t, double l_val,
                       const Eigen::VectorXcd& m, Eigen::VectorXcd& dm) {
    const int n = ctx.bath_model.mode_count();
    dm.resize(n);
    for (int j = 0; j < n; ++j) {
        const auto& mode = ctx.bath_model.modes[static_cast<std::size_t>(j)];
        dm(j) = -mode.gamma_rate * m(j) +
                0.5 * mode.gamma_rate * std::conj(bath::eval(mode.g, t)) * l_val;
    }
}

HopsLinearRhs::HopsLinearRhs(const HierarchyContext& ctx) : ctx_(ctx), w_(ctx.dim) {}

void HopsLinearRhs::operator()(double t, const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) {
    coeff_.refresh(ctx_, t);
    hierarchy_drift_core(ctx_, coeff_, step_drive, psi.data(), out.data(), w_);
}

HopsNonlinearRhs::HopsNonlinearRhs(const HierarchyContext& ctx) : ctx_(ctx), w_(ctx.dim) {}

void HopsNonlinearRhs::operator()(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& out) {
    coeff_.refresh(ctx_, t);
    const Eigen::Index dim = ctx_.dim;
    const int n = ctx_.bath_model.mode_count();
    const int ds = ctx_.system.dim;
    const cplx* yp = y.data();
    cplx* dy = out.data();

    const double l_val = girsanov_core(ctx_, yp);
    hierarchy_drift_core(ctx_, coeff_, step_drive, yp, dy, w_);

    // Shifted-noise drift: conj(sum_j f_j m_j) acts through L.
    cplx shift = 0.0;
    for (int j = 0; j < n; ++j) shift += coeff_.f[static_cast<std::size_t>(j)] * yp[dim + j];
    const cplx sc = std::conj(shift);
    if (sc != 0.0) {
        const cplx* ws = w_.data();
        for (Eigen::Index i = 0; i < dim; ++i) dy[i] += sc * ws[i];
    }

    // Normalization drift + memory evolution.
    for (int j = 0; j < n; ++j) {
        const auto& mode = ctx_.bath_model.modes[static_cast<std::size_t>(j)];
        const double xf = ctx_.coupling_factor[static_cast<std::size_t>(j)];
        const cplx fj = coeff_.f[static_cast<std::size_t>(j)];
        vec_add_lowering(*ctx_.basis, ds, j, I * l_val * xf * fj, yp, dy);
        dy[dim + j] = -mode.gamma_rate * yp[dim + j] +
                      0.5 * mode.gamma_rate * std::conj(coeff_.g[static_cast<std::size_t>(j)]) *
                          l_val;
    }
}

PsseRhs::PsseRhs(const HierarchyContext& ctx, bool nonlinear)
    : ctx_(ctx), nonlinear_(nonlinear), w_(ctx.dim), u_(ctx.dim) {
    if (!ctx.bath_model.pseudomode_ok())
        throw ModelDomainError("the white-noise unraveling requires f_j = g_j for all modes");
}

void PsseRhs::operator()(double t, const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) {
    coeff_.refresh(ctx_, t);
    hierarchy_drift_core(ctx_, coeff_, step_drive, psi.data(), out.data(), w_);
    if (!nonlinear_) return;
    const double nrm2 = psi.squaredNorm();
    if (nrm2 < degenerate_norm2)
        throw DegenerateTrajectory("state norm underflow in the normalized unraveling");
    const int ds = ctx_.system.dim;
    for (int j = 0; j < ctx_.bath_model.mode_count(); ++j) {
        u_.setZero();
        vec_add_lowering(*ctx_.basis, ds, j, 1.0, psi.data(), u_.data());
        const cplx mean_c = psi.dot(u_) / nrm2; // <c_j>; psi.dot conjugates psi
        const double rate = ctx_.bath_model.modes[static_cast<std::size_t>(j)].gamma_rate;
        out += (2.0 * rate * std::conj(mean_c)) * u_;
    }
}

// ---- density-matrix kernels -------------------------------------------------

void set_system_left(const FockBasis& b, const Eigen::MatrixXcd& op, const Eigen::MatrixXcd& x,
                     Eigen::MatrixXcd& out) {
    const Eigen::Index d = x.rows();
    for (Eigen::Index col = 0; col < d; ++col)
        vec_set_system(b, op, x.col(col).data(), out.col(col).data());
}

void add_system_left(const FockBasis& b, cplx alpha, const Eigen::MatrixXcd& op,
                     const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) {
    const Eigen::Index d = x.rows();
    for (Eigen::Index col = 0; col < d; ++col)
        vec_add_system(b, alpha, op, x.col(col).data(), out.col(col).data());
}

void set_system_right(const FockBasis& b, const Eigen::MatrixXcd& op, const Eigen::MatrixXcd& x,
                      Eigen::MatrixXcd& out) {
    // (x (op ⊗ I)).col(s', k) = sum_s'' op(s'', s') x.col(s'', k)
    const int ds = static_cast<int>(op.rows());
    const std::size_t nb = b.size();
    for (std::size_t k = 0; k < nb; ++k) {
        const Eigen::Index base = static_cast<Eigen::Index>(k) * ds;
        for (int sc = 0; sc < ds; ++sc) {
            out.col(base + sc) = op(0, sc) * x.col(base);
            for (int sr = 1; sr < ds; ++sr) out.col(base + sc) += op(sr, sc) * x.col(base + sr);
        }
    }
}

void add_system_right(const FockBasis& b, cplx alpha, const Eigen::MatrixXcd& op,
                      const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) {
    const int ds = static_cast<int>(op.rows());
    const std::size_t nb = b.size();
    for (std::size_t k = 0; k < nb; ++k) {
        const Eigen::Index base = static_cast<Eigen::Index>(k) * ds;
        for (int sc = 0; sc < ds; ++sc)
            for (int sr = 0; sr < ds; ++sr)
                out.col(base + sc) += (alpha * op(sr, sc)) * x.col(base + sr);
    }
}

void add_lowering_left(const FockBasis& b, int ds, int mode, cplx alpha, const Eigen::MatrixXcd& x,
                       Eigen::MatrixXcd& out) {
    const Eigen::Index d = x.rows();
    const std::size_t nb = b.size();
    for (Eigen::Index col = 0; col < d; ++col) {
        const cplx* xc = x.col(col).data();
        cplx* oc = out.col(col).data();
        for (std::size_t k = 0; k < nb; ++k) {
            const std::int64_t k2 = b.raise_index(mode, k);
            if (k2 < 0) continue;
            const cplx w = alpha * b.raise_factor(mode, k);
            const cplx* sb = xc + static_cast<std::size_t>(k2) * ds;
            cplx* db = oc + k * ds;
            for (int s = 0; s < ds; ++s) db[s] += w * sb[s];
        }
    }
}

void add_raising_left(const FockBasis& b, int ds, int mode, cplx alpha, const Eigen::MatrixXcd& x,
                      Eigen::MatrixXcd& out) {
    const Eigen::Index d = x.rows();
    const std::size_t nb = b.size();
    for (Eigen::Index col = 0; col < d; ++col) {
        const cplx* xc = x.col(col).data();
        cplx* oc = out.col(col).data();
        for (std::size_t k = 0; k < nb; ++k) {
            const std::int64_t k2 = b.lower_index(mode, k);
            if (k2 < 0) continue;
            const cplx w = alpha * b.lower_factor(mode, k);
            const cplx* sb = xc + static_cast<std::size_t>(k2) * ds;
            cplx* db = oc + k * ds;
            for (int s = 0; s < ds; ++s) db[s] += w * sb[s];
        }
    }
}

void add_lowering_right(const FockBasis& b, int ds, int mode, cplx alpha,
                        const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) {
    // out.col(m) += alpha sqrt(m_j) x.col(m - e_j)
    const std::size_t nb = b.size();
    for (std::size_t m = 0; m < nb; ++m) {
        const std::int64_t m2 = b.lower_index(mode, m);
        if (m2 < 0) continue;
        const cplx w = alpha * b.lower_factor(mode, m);
        const Eigen::Index dst = static_cast<Eigen::Index>(m) * ds;
        const Eigen::Index src = static_cast<Eigen::Index>(m2) * ds;
        for (int s = 0; s < ds; ++s) out.col(dst + s) += w * x.col(src + s);
    }
}

void add_raising_right(const FockBasis& b, int ds, int mode, cplx alpha, const Eigen::MatrixXcd& x,
                       Eigen::MatrixXcd& out) {
    // out.col(m) += alpha sqrt(m_j + 1) x.col(m + e_j)
    const std::size_t nb = b.size();
    for (std::size_t m = 0; m < nb; ++m) {
        const std::int64_t m2 = b.raise_index(mode, m);
        if (m2 < 0) continue;
        const cplx w = alpha * b.raise_factor(mode, m);
        const Eigen::Index dst = static_cast<Eigen::Index>(m) * ds;
        const Eigen::Index src = static_cast<Eigen::Index>(m2) * ds;
        for (int s = 0; s < ds; ++s) out.col(dst + s) += w * x.col(src + s);
    }
}

void add_sandwich(const FockBasis& b, int ds, int mode, cplx alpha, const Eigen::MatrixXcd& x,
                  Eigen::MatrixXcd& out) {
    const std::size_t nb = b.size();
    for (std::size_t m = 0; m < nb; ++m) {
        const std::int64_t m2 = b.raise_index(mode, m);
        if (m2 < 0) continue;
        const cplx wc = alpha * b.raise_factor(mode, m);
        for (int sc = 0; sc < ds; ++sc) {
            const cplx* xc = x.col(static_cast<Eigen::Index>(m2) * ds + sc).data();
            cplx* oc = out.col(static_cast<Eigen::Index>(m) * ds + sc).data();
            for (std::size_t k = 0; k < nb; ++k) {
                const std::int64_t k2 = b.raise_index(mode, k);
                if (k2 < 0) continue;
                const cplx w = wc * b.raise_factor(mode, k);
                const cplx* sb = xc + static_cast<std::size_t>(k2) * ds;
                cplx* db = oc + k * ds;
                for (int s = 0; s < ds; ++s) db[s] += w * sb[s];
            }
        }
    }
}

namespace {

void density_damping(const HierarchyContext& ctx, const Eigen::MatrixXcd& rho,
                     Eigen::MatrixXcd& out) {
    const Eigen::Index d = rho.rows();
    const double* damp = ctx.damping.data();
    for (Eigen::Index col = 0; col < d; ++col) {
        const double dc = damp[col];
        const cplx* xc = rho.col(col).data();
        cplx* oc = out.col(col).data();
        for (Eigen::Index r = 0; r < d; ++r) oc[r] = -(damp[r] + dc) * xc[r];
    }
}

void density_drive(const HierarchyContext& ctx, double c, const Eigen::MatrixXcd& w1,
                   const Eigen::MatrixXcd& w2, Eigen::MatrixXcd& out) {
    if (c == 0.0) return;
    out += (-I * c) * w1 + (I * c) * w2;
}

} // namespace

HmeRhs::HmeRhs(const HierarchyContext& ctx)
    : ctx_(ctx), w1_(ctx.dim, ctx.dim), w2_(ctx.dim, ctx.dim) {}

void HmeRhs::operator()(double t, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) {
    coeff_.refresh(ctx_, t);
    const auto& b = *ctx_.basis;
    const int ds = ctx_.system.dim;
    set_system_left(b, ctx_.system.coupling, rho, w1_);
    set_system_right(b, ctx_.system.coupling, rho, w2_);
    density_damping(ctx_, rho, out);
    add_system_left(b, -I, ctx_.system.hamiltonian, rho, out);
    add_system_right(b, I, ctx_.system.hamiltonian, rho, out);
    for (int j = 0; j < ctx_.bath_model.mode_count(); ++j) {
        const double xf = ctx_.coupling_factor[static_cast<std::size_t>(j)];
        const cplx fj = coeff_.f[static_cast<std::size_t>(j)];
        const cplx gj = coeff_.g[static_cast<std::size_t>(j)];
        add_lowering_left(b, ds, j, -I * xf * fj, w1_, out);
        add_raising_left(b, ds, j, -I * xf * std::conj(gj), w1_, out);
        add_raising_right(b, ds, j, I * xf * std::conj(fj), w2_, out);
        add_lowering_right(b, ds, j, I * xf * gj, w2_, out);
        add_raising_right(b, ds, j, -I * xf * std::conj(fj), w1_, out);
        add_lowering_left(b, ds, j, I * xf * fj, w2_, out);
    }
    density_drive(ctx_, coeff_.drive, w1_, w2_, out);
}

PmeRhs::PmeRhs(const HierarchyContext& ctx)
    : ctx_(ctx), w1_(ctx.dim, ctx.dim), w2_(ctx.dim, ctx.dim) {
    if (!ctx.bath_model.pseudomode_ok())
        throw ModelDomainError("the pseudomode master equation requires f_j = g_j "
                               "for all modes");
}

void PmeRhs::operator()(double t, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) {
    coeff_.refresh(ctx_, t);
    const auto& b = *ctx_.basis;
    const int ds = ctx_.system.dim;
    set_system_left(b, ctx_.system.coupling, rho, w1_);
    set_system_right(b, ctx_.system.coupling, rho, w2_);
    density_damping(ctx_, rho, out);
    add_system_left(b, -I, ctx_.system.hamiltonian, rho, out);
    add_system_right(b, I, ctx_.system.hamiltonian, rho, out);
    for (int j = 0; j < ctx_.bath_model.mode_count(); ++j) {
        const double xf = ctx_.coupling_factor[static_cast<std::size_t>(j)];
        const cplx fj = coeff_.f[static_cast<std::size_t>(j)];
        const double rate = ctx_.bath_model.modes[static_cast<std::size_t>(j)].gamma_rate;
        add_lowering_left(b, ds, j, -I * xf * fj, w1_, out);
        add_raising_left(b, ds, j, -I * xf * std::conj(fj), w1_, out);
        add_raising_right(b, ds, j, I * xf * std::conj(fj), w2_, out);
        add_lowering_right(b, ds, j, I * xf * fj, w2_, out);
        add_sandwich(b, ds, j, 2.0 * rate, rho, out);
    }
    density_drive(ctx_, coeff_.drive, w1_, w2_, out);
}

// ---- noise insertions -------------------------------------------------------

void add_hops_noise(const HierarchyContext& ctx, cplx z_value, double h,
                    Eigen::Ref<const Eigen::VectorXcd> psi_start, Eigen::Ref<Eigen::VectorXcd> psi) {
    vec_add_system(*ctx.basis, -I * std::conj(z_value) * h, ctx.system.coupling,
                   psi_start.data(), psi.data());
}

void add_psse_noise(const HierarchyContext& ctx, const std::vector<cplx>& dw,
                    Eigen::Ref<const Eigen::VectorXcd> psi_start, Eigen::Ref<Eigen::VectorXcd> psi) {
    const int ds = ctx.system.dim;
    for (int j = 0; j < ctx.bath_model.mode_count(); ++j) {
        const double rate = ctx.bath_model.modes[static_cast<std::size_t>(j)].gamma_rate;
        const cplx a = std::sqrt(2.0 * rate) * std::conj(dw[static_cast<std::size_t>(j)]);
        vec_add_lowering(*ctx.basis, ds, j, a, psi_start.data(), psi.data());
    }
}

} // namespace nshops::dynamics
