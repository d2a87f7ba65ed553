#include "nshops/simulate.hpp"

#include "nshops/csv.hpp"
#include "nshops/error_metrics.hpp"
#include "nshops/exceptions.hpp"
#include "nshops/rng.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

namespace nshops::sim {

bool is_stochastic(Method m) {
    return m == Method::HopsLinear || m == Method::HopsNonlinear || m == Method::PsseLinear ||
           m == Method::PsseNonlinear;
}

const char* method_name(Method m) {
    switch (m) {
        case Method::HopsLinear: return "hops-linear";
        case Method::HopsNonlinear: return "hops-nonlinear";
        case Method::Hme: return "hme";
        case Method::Pme: return "pme";
        case Method::PsseLinear: return "psse-linear";
        case Method::PsseNonlinear: return "psse-nonlinear";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    for (Method m : {Method::HopsLinear, Method::HopsNonlinear, Method::Hme, Method::Pme,
                     Method::PsseLinear, Method::PsseNonlinear})
        if (name == method_name(m)) return m;
    return std::nullopt;
}

namespace {

using dynamics::HierarchyContext;
using ensemble::EnsembleAccumulator;
using cplx = std::complex<double>;

void validate_spec(const RunSpec& spec) {
    if (!(spec.horizon > 0.0)) throw ConfigError("horizon must be > 0");
    if (spec.steps < 1) throw ConfigError("step count must be >= 1");
    if (spec.stored_points < 1) throw ConfigError("stored_points must be >= 1");
    if (spec.steps % spec.stored_points != 0)
        throw ConfigError("step count must be divisible by stored_points");
    if (spec.initial_state.size() != spec.system.dim)
        throw ConfigError("initial state dimension does not match the system");
    if (!(spec.initial_state.norm() > 0.0)) throw ConfigError("initial state has zero norm");
    if (is_stochastic(spec.method)) {
        if (spec.trajectories < 1)
            throw ConfigError("stochastic methods require trajectories >= 1");
    } else {
        if (spec.bath_model.has_thermal())
            throw ModelDomainError("thermal noise requires a stochastic method");
    }
}

std::vector<double> stored_times(const RunSpec& spec) {
    const long stride = spec.steps / spec.stored_points;
    const double h = spec.step_size();
    std::vector<double> times(static_cast<std::size_t>(spec.stored_points) + 1);
    for (int i = 0; i <= spec.stored_points; ++i)
        times[static_cast<std::size_t>(i)] = static_cast<double>(i * stride) * h;
    return times;
}

Eigen::VectorXcd normalized_initial(const RunSpec& spec) {
    Eigen::VectorXcd psi = spec.initial_state;
    psi /= psi.norm();
    return psi;
}

ensemble::ObservableSet observables_for(const RunSpec& spec) {
    if (spec.system.dim == 2) return ensemble::bloch_set(spec.rot_omega0);
    return {};
}

// ---- deterministic methods ---------------------------------------------------

template <class Rhs>
SeriesResult propagate_density(const RunSpec& spec, const HierarchyContext& ctx, Rhs& rhs,
                               bool fock_trace_reduction) {
    const Eigen::Index dim = ctx.dim;
    const int ds = spec.system.dim;
    const Eigen::VectorXcd psi = normalized_initial(spec);

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    rho.topLeftCorner(ds, ds) = psi * psi.adjoint();

    SeriesResult result;
    result.times = stored_times(spec);
    result.rho.reserve(result.times.size());

    const double h = spec.step_size();
    const long stride = spec.steps / spec.stored_points;
    dynamics::Rk4Stepper<Eigen::MatrixXcd> stepper(rho);

    auto record = [&](long step) {
        Eigen::MatrixXcd reduced = fock_trace_reduction ? ensemble::reduce_fock_trace(rho, ds)
                                                        : ensemble::reduce_vacuum_block(rho, ds);
        if (!reduced.allFinite() || !rho.allFinite())
            throw NumericalError("non-finite extended density at t = " +
                                 std::to_string(static_cast<double>(step) * h));
        result.rho.push_back(std::move(reduced));
    };

    record(0);
    for (long n = 0; n < spec.steps; ++n) {
        stepper.step(rhs, static_cast<double>(n) * h, h, rho);
        if ((n + 1) % stride == 0) record(n + 1);
    }
    return result;
}

// ---- stochastic trajectories ---------------------------------------------------

struct NoiseSetup {
    std::shared_ptr<const noise::ColoredNoiseFactorization> colored;
    std::shared_ptr<const noise::RealNoiseFactorization> thermal;
    bool use_ou = false;
    std::vector<double> rates;
};

// The covariance factorization depends only on (model, grid); scans and
// references reuse it across runs. Keyed by an exact fingerprint of the
// grid and the coefficient evaluations at probe times.
std::vector<double> noise_fingerprint(const bath::BathModel& model,
                                      const std::vector<double>& grid) {
    std::vector<double> fp{static_cast<double>(grid.size()), grid.front(), grid.back()};
    const double span = grid.back() - grid.front();
    for (const auto& m : model.modes) {
        fp.push_back(m.gamma_rate);
        for (double frac : {0.0, 0.3777, 0.8111}) {
            const double t = grid.front() + frac * span;
            const auto f = bath::eval(m.f, t), g = bath::eval(m.g, t);
            fp.insert(fp.end(), {f.real(), f.imag(), g.real(), g.imag()});
        }
    }
    return fp;
}

std::shared_ptr<const noise::ColoredNoiseFactorization>
cached_factorization(const bath::BathModel& model, const std::vector<double>& grid) {
    static std::mutex mutex;
    static std::vector<std::pair<std::vector<double>,
                                 std::shared_ptr<const noise::ColoredNoiseFactorization>>>
        cache;
    const auto fp = noise_fingerprint(model, grid);
    {
        std::lock_guard<std::mutex> lock(mutex);
        for (const auto& [key, fact] : cache)
            if (key == fp) return fact;
    }
    auto fact = std::make_shared<const noise::ColoredNoiseFactorization>(
        noise::ColoredNoiseFactorization::build(model, grid));
    std::lock_guard<std::mutex> lock(mutex);
    if (cache.size() >= 4) cache.erase(cache.begin());
    cache.emplace_back(fp, fact);
    return fact;
}

NoiseSetup prepare_noise(const RunSpec& spec, bool needs_colored) {
    NoiseSetup setup;
    const bool pseudo_ok = spec.bath_model.pseudomode_ok();
    NoiseRoute route = spec.noise;
    if (route == NoiseRoute::Auto)
        route = pseudo_ok ? NoiseRoute::OrnsteinUhlenbeck : NoiseRoute::Covariance;

    std::vector<double> grid(static_cast<std::size_t>(spec.steps));
    const double h = spec.step_size();
    for (long n = 0; n < spec.steps; ++n)
        grid[static_cast<std::size_t>(n)] = static_cast<double>(n) * h;

    if (needs_colored) {
        if (route == NoiseRoute::OrnsteinUhlenbeck) {
            if (!pseudo_ok)
                throw ModelDomainError("the Ornstein-Uhlenbeck noise route requires "
                                       "f_j = g_j for all modes");
            setup.use_ou = true;
            for (const auto& m : spec.bath_model.modes) setup.rates.push_back(m.gamma_rate);
        } else {
            if (spec.steps > covariance_grid_cap)
                throw CapacityError(
                    "covariance noise route needs a " + std::to_string(spec.steps) + "x" +
                    std::to_string(spec.steps) +
                    " eigendecomposition, beyond the configured cap; reduce the step count "
                    "or use the Ornstein-Uhlenbeck route");
            setup.colored = cached_factorization(spec.bath_model, grid);
        }
    }
    if (spec.bath_model.has_thermal()) {
        if (spec.steps > covariance_grid_cap)
            throw CapacityError("thermal noise sampling needs an eigendecomposition beyond "
                                "the configured cap; reduce the step count");
        setup.thermal = std::make_shared<const noise::RealNoiseFactorization>(
            noise::RealNoiseFactorization::build(
                [&](double t, double s) { return spec.bath_model.thermal_cov(t, s); }, grid));
    }
    return setup;
}

class TrajectoryRunner {
public:
    TrajectoryRunner(const RunSpec& spec, const HierarchyContext& ctx, const NoiseSetup& noise)
        : spec_(spec), ctx_(ctx), noise_(noise), psi0_(normalized_initial(spec)) {
        const Eigen::Index dim = ctx.dim;
        const int n_modes = ctx.bath_model.mode_count();
        switch (spec.method) {
            case Method::HopsLinear:
                hops_lin_.emplace(ctx);
                y_.resize(dim);
                break;
            case Method::HopsNonlinear:
                hops_nl_.emplace(ctx);
                y_.resize(dim + n_modes);
                break;
            case Method::PsseLinear:
            case Method::PsseNonlinear:
                psse_.emplace(ctx, spec.method == Method::PsseNonlinear);
                y_.resize(dim);
                break;
            default:
                throw ModelDomainError("not a stochastic method");
        }
        psi_start_.resize(dim);
        stepper_.emplace(y_);
        dw_.resize(static_cast<std::size_t>(n_modes));
    }

    // Fills `series` with one reduced projector per stored time; throws
    // DegenerateTrajectory when the trajectory must be discarded.
    void run(std::uint64_t traj_index, std::vector<Eigen::MatrixXcd>& series) {
        RngStream rng(spec_.seed, traj_index);
        const Eigen::Index dim = ctx_.dim;
        const int ds = spec_.system.dim;
        const double h = spec_.step_size();
        const long stride = spec_.steps / spec_.stored_points;

        // Fixed draw order: thermal path, then colored path / OU start,
        // then per-step increments.
        if (noise_.thermal) noise_.thermal->draw(rng, ypath_);
        noise::OUState ou;
        const bool hops = spec_.method == Method::HopsLinear ||
                          spec_.method == Method::HopsNonlinear;
        if (hops) {
            if (noise_.use_ou)
                ou = noise::ou_init(noise_.rates, rng);
            else
                noise_.colored->draw(rng, zpath_);
        }

        y_.setZero();
        y_.head(ds) = psi0_;
        series.resize(static_cast<std::size_t>(spec_.stored_points) + 1);
        record(series, 0);

        for (long n = 0; n < spec_.steps; ++n) {
            const double t = static_cast<double>(n) * h;
            const double drive_y = noise_.thermal ? ypath_(n) : 0.0;
            psi_start_ = y_.head(dim);
            switch (spec_.method) {
                case Method::HopsLinear: {
                    const cplx z = noise_.use_ou
                                       ? noise::assemble_Z_from_ou(ctx_.bath_model, ou, t)
                                       : zpath_(n);
                    hops_lin_->step_drive = drive_y;
                    stepper_->step(*hops_lin_, t, h, y_);
                    dynamics::add_hops_noise(ctx_, z, h, psi_start_, y_.head(dim));
                    if (noise_.use_ou) noise::ou_step(ou, h, rng);
                    break;
                }
                case Method::HopsNonlinear: {
                    const cplx z = noise_.use_ou
                                       ? noise::assemble_Z_from_ou(ctx_.bath_model, ou, t)
                                       : zpath_(n);
                    hops_nl_->step_drive = drive_y;
                    stepper_->step(*hops_nl_, t, h, y_);
                    dynamics::add_hops_noise(ctx_, z, h, psi_start_, y_.head(dim));
                    if (noise_.use_ou) noise::ou_step(ou, h, rng);
                    break;
                }
                default: {
                    for (auto& w : dw_) w = noise::white_noise_increment(rng, h);
                    psse_->step_drive = drive_y;
                    stepper_->step(*psse_, t, h, y_);
                    dynamics::add_psse_noise(ctx_, dw_, psi_start_, y_.head(dim));
                    break;
                }
            }
            if (!std::isfinite(y_.squaredNorm()))
                throw NumericalError("non-finite trajectory state at t = " + std::to_string(t) +
                                     " (trajectory " + std::to_string(traj_index) + ")");
            if ((n + 1) % stride == 0) record(series, (n + 1) / stride);
        }
    }

private:
    void record(std::vector<Eigen::MatrixXcd>& series, long slot) {
        const Eigen::Index dim = ctx_.dim;
        const int ds = spec_.system.dim;
        const auto psi = y_.head(dim);
        switch (spec_.method) {
            case Method::HopsLinear:
                series[static_cast<std::size_t>(slot)] = ensemble::vacuum_projector(psi, ds);
                break;
            case Method::HopsNonlinear: {
                if (psi.head(ds).squaredNorm() < dynamics::degenerate_norm2)
                    throw DegenerateTrajectory("vacuum-norm underflow at a stored point");
                series[static_cast<std::size_t>(slot)] =
                    ensemble::vacuum_projector_normalized(psi, ds);
                break;
            }
            case Method::PsseLinear:
                series[static_cast<std::size_t>(slot)] = ensemble::fock_trace_projector(psi, ds);
                break;
            default: {
                if (psi.squaredNorm() < dynamics::degenerate_norm2)
                    throw DegenerateTrajectory("state-norm underflow at a stored point");
                series[static_cast<std::size_t>(slot)] =
                    ensemble::fock_trace_projector_normalized(psi, ds);
                break;
            }
        }
    }

    const RunSpec& spec_;
    const HierarchyContext& ctx_;
    const NoiseSetup& noise_;
    Eigen::VectorXcd psi0_, y_, psi_start_, zpath_;
    Eigen::VectorXd ypath_;
    std::vector<cplx> dw_;
    std::optional<dynamics::HopsLinearRhs> hops_lin_;
    std::optional<dynamics::HopsNonlinearRhs> hops_nl_;
    std::optional<dynamics::PsseRhs> psse_;
    std::optional<dynamics::Rk4Stepper<Eigen::VectorXcd>> stepper_;
};

} // namespace

SeriesResult run_deterministic(const RunSpec& spec) {
    validate_spec(spec);
    if (is_stochastic(spec.method))
        throw ConfigError("run_deterministic called with a stochastic method");
    auto basis = fock::FockBasis::build(spec.truncation);
    auto ctx = HierarchyContext::make(spec.system, spec.bath_model, basis);
    if (spec.method == Method::Hme) {
        dynamics::HmeRhs rhs(ctx);
        return propagate_density(spec, ctx, rhs, false);
    }
    dynamics::PmeRhs rhs(ctx);
    return propagate_density(spec, ctx, rhs, true);
}

EnsembleResult run_stochastic(const RunSpec& spec) {
    validate_spec(spec);
    if (!is_stochastic(spec.method))
        throw ConfigError("run_stochastic called with a deterministic method");
    auto basis = fock::FockBasis::build(spec.truncation);
    auto ctx = HierarchyContext::make(spec.system, spec.bath_model, basis);
    const bool hops = spec.method == Method::HopsLinear || spec.method == Method::HopsNonlinear;
    const NoiseSetup noise_setup = prepare_noise(spec, hops);

    const auto times = stored_times(spec);
    const auto obs = observables_for(spec);

    // Trajectories are processed in fixed blocks and merged in block order,
    // so results do not depend on the worker count.
    constexpr long block_size = 64;
    const long n_blocks = (spec.trajectories + block_size - 1) / block_size;
    std::vector<EnsembleAccumulator> block_accs;
    block_accs.reserve(static_cast<std::size_t>(n_blocks));
    for (long b = 0; b < n_blocks; ++b)
        block_accs.emplace_back(times, spec.system.dim, obs);
    std::vector<long> block_discards(static_cast<std::size_t>(n_blocks), 0);

    int n_threads = spec.threads > 0 ? spec.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    n_threads = static_cast<int>(std::min<long>(n_threads, n_blocks));

    std::atomic<long> next_block{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        TrajectoryRunner runner(spec, ctx, noise_setup);
        std::vector<Eigen::MatrixXcd> series;
        while (!failed.load(std::memory_order_relaxed)) {
            const long b = next_block.fetch_add(1);
            if (b >= n_blocks) break;
            const long begin = b * block_size;
            const long end = std::min(spec.trajectories, begin + block_size);
            for (long k = begin; k < end; ++k) {
                try {
                    runner.run(static_cast<std::uint64_t>(k), series);
                    block_accs[static_cast<std::size_t>(b)].add_trajectory(series);
                } catch (const DegenerateTrajectory&) {
                    ++block_discards[static_cast<std::size_t>(b)];
                } catch (const Error& e) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    failure = e.what();
                    failed.store(true);
                    return;
                }
            }
        }
    };

    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw NumericalError(failure);

    EnsembleAccumulator total(times, spec.system.dim, obs);
    long discarded = 0;
    for (long b = 0; b < n_blocks; ++b) {
        total.merge(block_accs[static_cast<std::size_t>(b)]);
        discarded += block_discards[static_cast<std::size_t>(b)];
    }
    if (total.count() == 0)
        throw NumericalError("all trajectories were discarded as degenerate");

    EnsembleResult result;
    result.times = times;
    result.requested = spec.trajectories;
    result.completed = total.count();
    result.discarded = discarded;
    for (const auto& o : obs.items) result.obs_names.push_back(o.name);
    result.rho.reserve(times.size());
    result.rho_se.reserve(times.size());
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        result.rho.push_back(total.mean(ti));
        result.rho_se.push_back(total.standard_error(ti));
        std::vector<double> om(obs.items.size()), os(obs.items.size());
        for (std::size_t oi = 0; oi < obs.items.size(); ++oi) {
            om[oi] = total.observable_mean(ti, oi);
            os[oi] = total.observable_se(ti, oi);
        }
        result.obs.push_back(std::move(om));
        result.obs_se.push_back(std::move(os));
    }
    return result;
}

SeriesResult run_any(const RunSpec& spec) {
    if (is_stochastic(spec.method)) return run_stochastic(spec).series();
    return run_deterministic(spec);
}

// ---- CSV ----------------------------------------------------------------------

namespace {
std::vector<std::string> density_columns(int ds, const char* prefix) {
    std::vector<std::string> cols;
    for (int i = 0; i < ds; ++i)
        for (int j = 0; j < ds; ++j) {
            cols.push_back(std::string(prefix) + "re_r" + std::to_string(i) + std::to_string(j));
            cols.push_back(std::string(prefix) + "im_r" + std::to_string(i) + std::to_string(j));
        }
    return cols;
}
} // namespace

void write_series_csv(const std::string& path, const SeriesResult& result, double rot_omega0) {
    const int ds = result.rho.empty() ? 0 : static_cast<int>(result.rho[0].rows());
    csv::Writer w(path);
    std::vector<std::string> cols{"t"};
    for (auto& c : density_columns(ds, "")) cols.push_back(c);
    const bool bloch = ds == 2;
    if (bloch) for (const char* n : {"sx", "sy", "sz", "tsx", "tsy"}) cols.push_back(n);
    w.header(cols);
    const auto set = ensemble::bloch_set(rot_omega0);
    std::vector<double> row;
    for (std::size_t ti = 0; ti < result.times.size(); ++ti) {
        row.clear();
        row.push_back(result.times[ti]);
        for (int i = 0; i < ds; ++i)
            for (int j = 0; j < ds; ++j) {
                row.push_back(result.rho[ti](i, j).real());
                row.push_back(result.rho[ti](i, j).imag());
            }
        if (bloch)
            for (std::size_t oi = 0; oi < 5; ++oi)
                row.push_back(set.value(oi, result.rho[ti], result.times[ti]));
        w.row(row);
    }
}

void write_ensemble_csv(const std::string& path, const EnsembleResult& result) {
    const int ds = result.rho.empty() ? 0 : static_cast<int>(result.rho[0].rows());
    csv::Writer w(path);
    std::vector<std::string> cols{"t"};
    for (auto& c : density_columns(ds, "")) cols.push_back(c);
    for (const auto& n : result.obs_names) cols.push_back(n);
    for (int i = 0; i < ds; ++i)
        for (int j = 0; j < ds; ++j)
            cols.push_back("se_r" + std::to_string(i) + std::to_string(j));
    for (const auto& n : result.obs_names) cols.push_back("se_" + n);
    w.header(cols);
    std::vector<double> row;
    for (std::size_t ti = 0; ti < result.times.size(); ++ti) {
        row.clear();
        row.push_back(result.times[ti]);
        for (int i = 0; i < ds; ++i)
            for (int j = 0; j < ds; ++j) {
                row.push_back(result.rho[ti](i, j).real());
                row.push_back(result.rho[ti](i, j).imag());
            }
        for (double v : result.obs[ti]) row.push_back(v);
        for (int i = 0; i < ds; ++i)
            for (int j = 0; j < ds; ++j) row.push_back(result.rho_se[ti](i, j));
        for (double v : result.obs_se[ti]) row.push_back(v);
        w.row(row);
    }
}

// ---- scans ----------------------------------------------------------------------

RunSpec apply_axis(RunSpec spec, const std::string& axis, double value) {
    auto to_int = [&](double v) {
        const long n = std::lround(v);
        if (std::abs(v - static_cast<double>(n)) > 1e-9 || n < 0)
            throw ConfigError("axis '" + axis + "' needs a non-negative integer value");
        return n;
    };
    if (axis == "nsum") {
        if (spec.truncation.kind != fock::TruncationScheme::Kind::Triangular)
            throw ConfigError("axis 'nsum' requires a triangular truncation");
        spec.truncation.nsum = static_cast<int>(to_int(value));
        return spec;
    }
    if (axis == "nmax") {
        if (spec.truncation.kind != fock::TruncationScheme::Kind::Rectangular)
            throw ConfigError("axis 'nmax' requires a rectangular truncation");
        for (auto& c : spec.truncation.nmax) c = static_cast<int>(to_int(value));
        return spec;
    }
    if (axis.rfind("nmax", 0) == 0) {
        if (spec.truncation.kind != fock::TruncationScheme::Kind::Rectangular)
            throw ConfigError("axis '" + axis + "' requires a rectangular truncation");
        const int j = std::stoi(axis.substr(4));
        if (j < 1 || j > static_cast<int>(spec.truncation.nmax.size()))
            throw ConfigError("axis '" + axis + "': mode index out of range");
        spec.truncation.nmax[static_cast<std::size_t>(j - 1)] = static_cast<int>(to_int(value));
        return spec;
    }
    if (axis == "trajectories") {
        spec.trajectories = to_int(value);
        return spec;
    }
    if (axis == "step") {
        if (!(value > 0.0)) throw ConfigError("axis 'step' needs a positive step size");
        const double ratio = spec.horizon / value;
        const long steps = std::lround(ratio);
        if (std::abs(ratio - static_cast<double>(steps)) > 1e-6 * ratio)
            throw ConfigError("axis 'step': step size must divide the horizon");
        spec.steps = steps;
        return spec;
    }
    throw ConfigError("unknown scan axis '" + axis + "'");
}

std::vector<ScanPoint> scan_axis(const RunSpec& base, const std::string& axis,
                                 const std::vector<double>& values, const RunSpec& reference) {
    if (values.empty()) throw ConfigError("scan needs at least one axis value");
    const SeriesResult ref = run_any(reference);

    // Step-error estimate at the reference truncation, reused on every row.
    errlab::RealSeries step_series;
    bool has_step = false;
    if (!is_stochastic(base.method) && axis != "step" && base.steps % 4 == 0 &&
        (base.steps / 4) % base.stored_points == 0) {
        RunSpec rs = base;
        rs.truncation = reference.truncation;
        const SeriesResult rho_h = run_deterministic(rs);
        rs.steps = base.steps / 2;
        const SeriesResult rho_2h = run_deterministic(rs);
        rs.steps = base.steps / 4;
        const SeriesResult rho_4h = run_deterministic(rs);
        const auto order = errlab::richardson_order(rho_h.rho, rho_2h.rho, rho_4h.rho);
        step_series = errlab::step_error(rho_h.rho, rho_2h.rho, order);
        has_step = true;
    }

    std::vector<ScanPoint> points;
    points.reserve(values.size());
    for (double v : values) {
        const RunSpec spec = apply_axis(base, axis, v);
        const SeriesResult s = run_any(spec);
        if (s.times.size() != ref.times.size())
            throw ConfigError("scan and reference use different stored grids");
        ScanPoint p;
        p.value = v;
        if (has_step) {
            const auto trunc = errlab::truncation_error(s.rho, ref.rho);
            const auto report = errlab::total_and_rms(step_series, trunc);
            p.r = report.rms;
            errlab::RealSeries zeros(trunc.size(),
                                     Eigen::MatrixXd::Zero(trunc[0].rows(), trunc[0].cols()));
            p.r_trunc = errlab::total_and_rms(zeros, trunc).rms;
            p.r_step = errlab::total_and_rms(step_series, zeros).rms;
            p.has_sources = true;
        } else {
            p.r = errlab::stochastic_error(s.rho, ref.rho).rms;
        }
        points.push_back(p);
    }
    return points;
}

// ---- noise validation -------------------------------------------------------------

NoiseCheckReport noise_check(const bath::BathModel& model, const std::vector<double>& grid,
                             long draws, NoiseRoute route, std::uint64_t seed) {
    if (grid.empty()) throw ConfigError("noise check needs a non-empty grid");
    if (draws < 2) throw ConfigError("noise check needs at least 2 draws");
    if (route == NoiseRoute::Auto)
        route = model.pseudomode_ok() ? NoiseRoute::OrnsteinUhlenbeck : NoiseRoute::Covariance;

    const Eigen::Index m = static_cast<Eigen::Index>(grid.size());
    NoiseCheckReport report;
    report.grid = grid;
    report.analytic.resize(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i)
            report.analytic(i, j) = bath::eval_bcf(model, grid[i], grid[j]);

    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(m, m);
    Eigen::MatrixXcd pseudo = Eigen::MatrixXcd::Zero(m, m);
    Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(m);

    RngStream rng(seed, 0);
    constexpr long chunk = 512;
    Eigen::MatrixXcd block(m, chunk);

    if (route == NoiseRoute::Covariance) {
        const auto fact = noise::ColoredNoiseFactorization::build(model, grid);
        report.clipped_fraction = fact.clipped_fraction();
        Eigen::VectorXcd z;
        long done = 0;
        while (done < draws) {
            const long take = std::min(chunk, draws - done);
            for (long c = 0; c < take; ++c) {
                fact.draw(rng, z);
                block.col(c) = z;
            }
            const auto used = block.leftCols(take);
            cov.noalias() += used * used.adjoint();
            pseudo.noalias() += used * used.transpose();
            mean += used.rowwise().sum();
            done += take;
        }
    } else {
        if (!model.pseudomode_ok())
            throw ModelDomainError("the Ornstein-Uhlenbeck noise route requires f_j = g_j "
                                   "for all modes");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw ConfigError("noise-check grid must be strictly increasing");
        std::vector<double> rates;
        double max_rate = 0.0;
        for (const auto& mode : model.modes) {
            rates.push_back(mode.gamma_rate);
            max_rate = std::max(max_rate, mode.gamma_rate);
        }
        // Substep so that the Euler-Maruyama bias stays well below the
        // statistical resolution of the check.
        const double dt_target = 0.002 / max_rate;
        Eigen::VectorXcd z(m);
        long done = 0;
        while (done < draws) {
            const long take = std::min(chunk, draws - done);
            for (long c = 0; c < take; ++c) {
                auto ou = noise::ou_init(rates, rng);
                z(0) = noise::assemble_Z_from_ou(model, ou, grid[0]);
                for (Eigen::Index gi = 1; gi < m; ++gi) {
                    const double span = grid[static_cast<std::size_t>(gi)] -
                                        grid[static_cast<std::size_t>(gi - 1)];
                    const long nsub = std::max<long>(1, std::lround(std::ceil(span / dt_target)));
                    const double dt = span / static_cast<double>(nsub);
                    for (long s = 0; s < nsub; ++s) noise::ou_step(ou, dt, rng);
                    z(gi) = noise::assemble_Z_from_ou(model, ou, grid[static_cast<std::size_t>(gi)]);
                }
                block.col(c) = z;
            }
            const auto used = block.leftCols(take);
            cov.noalias() += used * used.adjoint();
            pseudo.noalias() += used * used.transpose();
            mean += used.rowwise().sum();
            done += take;
        }
    }

    const double M = static_cast<double>(draws);
    report.draws = draws;
    report.empirical = cov / M;
    report.pseudo = pseudo / M;
    mean /= M;

    constexpr double inf = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const double vii = std::max(report.analytic(i, i).real(), 0.0);
            const double vjj = std::max(report.analytic(j, j).real(), 0.0);
            const double se = std::sqrt(vii * vjj / M);
            const double dc = std::abs(report.empirical(i, j) - report.analytic(i, j));
            const double dp = std::abs(report.pseudo(i, j));
            if (se == 0.0) {
                if (dc > 0.0) report.max_sigma_cov = inf;
                if (dp > 0.0) report.max_sigma_pseudo = inf;
            } else {
                report.max_sigma_cov = std::max(report.max_sigma_cov, dc / se);
                report.max_sigma_pseudo = std::max(report.max_sigma_pseudo, dp / se);
            }
        }
        const double vjj = std::max(report.analytic(j, j).real(), 0.0);
        const double se_mean = std::sqrt(vjj / M);
        const double dm = std::abs(mean(j));
        if (se_mean == 0.0) {
            if (dm > 0.0) report.max_sigma_mean = inf;
        } else {
            report.max_sigma_mean = std::max(report.max_sigma_mean, dm / se_mean);
        }
    }
    report.pass = report.max_sigma_cov <= 5.0 && report.max_sigma_pseudo <= 5.0 &&
                  report.max_sigma_mean <= 5.0;
    return report;
}

void write_noise_check_csv(const std::string& path, const NoiseCheckReport& report) {
    csv::Writer w(path);
    w.header({"t_i", "t_j", "re_emp", "im_emp", "re_ana", "im_ana", "re_pseudo", "im_pseudo",
              "sigma"});
    const Eigen::Index m = report.empirical.rows();
    const double M = static_cast<double>(std::max<long>(report.draws, 1));
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i) {
            const double vii = std::max(report.analytic(i, i).real(), 0.0);
            const double vjj = std::max(report.analytic(j, j).real(), 0.0);
            const double dc = std::abs(report.empirical(i, j) - report.analytic(i, j));
            double sigma = 0.0;
            if (vii * vjj > 0.0) sigma = dc / std::sqrt(vii * vjj / M);
            w.row({report.grid[static_cast<std::size_t>(i)],
                   report.grid[static_cast<std::size_t>(j)], report.empirical(i, j).real(),
                   report.empirical(i, j).imag(), report.analytic(i, j).real(),
                   report.analytic(i, j).imag(), report.pseudo(i, j).real(),
                   report.pseudo(i, j).imag(), sigma});
        }
}

} // namespace nshops::sim
