#include "nshops/config.hpp"

#include "nshops/csv.hpp"
#include "nshops/exceptions.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace nshops::config {

using nlohmann::json;
using cplx = std::complex<double>;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError(path + ": " + message);
}

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& required, const std::set<std::string>& optional) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items())
        if (!required.count(key) && !optional.count(key)) fail(path + "." + key, "unknown key");
    for (const auto& key : required)
        if (!obj.contains(key)) fail(path + "." + key, "missing required key");
}

double get_number(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) fail(path + "." + key, "missing required key");
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

double get_number_or(const json& obj, const std::string& path, const std::string& key,
                     double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

long get_integer(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) fail(path + "." + key, "missing required key");
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long>();
}

cplx get_complex(const json& v, const std::string& path) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    fail(path, "expected a number or [re, im] pair");
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

Eigen::MatrixXcd get_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a non-empty matrix (array of rows)");
    const std::size_t rows = v.size();
    Eigen::MatrixXcd m;
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = v[i];
        if (!row.is_array()) fail(path, "expected a matrix row at index " + std::to_string(i));
        if (i == 0) m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(row.size()));
        if (row.size() != static_cast<std::size_t>(m.cols())) fail(path, "ragged matrix rows");
        for (std::size_t j = 0; j < row.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                get_complex(row[j], path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
    return m;
}

json matrix_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXcd get_vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a non-empty vector");
    Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = get_complex(v[i], path + "[" + std::to_string(i) + "]");
    return out;
}

json vector_json(const Eigen::VectorXcd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
    return out;
}

// ---- time coefficients -------------------------------------------------------

bath::TimeCoefficient parse_coefficient(const json& v, const std::string& path,
                                        const std::string& base_dir) {
    if (!v.is_object() || !v.contains("kind")) fail(path, "expected a coefficient object with 'kind'");
    const std::string kind = v.at("kind").get<std::string>();
    if (kind == "stationary") {
        require_keys(v, path, {"kind", "amp", "freq"}, {});
        return bath::StationaryCoeff{get_complex(v.at("amp"), path + ".amp"),
                                     get_number(v, path, "freq")};
    }
    if (kind == "squeezed") {
        require_keys(v, path, {"kind", "coupling", "center", "r"},
                     {"phi", "detuning", "conj_amp"});
        const double r = get_number(v, path, "r");
        if (r < 0.0) fail(path + ".r", "squeeze parameter must be >= 0");
        bool conj_amp = false;
        if (v.contains("conj_amp")) {
            if (!v.at("conj_amp").is_boolean()) fail(path + ".conj_amp", "expected a boolean");
            conj_amp = v.at("conj_amp").get<bool>();
        }
        return bath::make_squeezed(get_complex(v.at("coupling"), path + ".coupling"),
                                   get_number(v, path, "center"), r,
                                   get_number_or(v, path, "phi", 0.0),
                                   get_number_or(v, path, "detuning", 0.0), conj_amp);
    }
    if (kind == "harmonic") {
        require_keys(v, path, {"kind", "prefactor", "shape", "center"}, {"phi"});
        const std::string shape = v.at("shape").get<std::string>();
        if (shape != "cos" && shape != "sin") fail(path + ".shape", "expected 'cos' or 'sin'");
        return bath::HarmonicCoeff{get_number(v, path, "prefactor"),
                                   shape == "cos" ? bath::HarmonicCoeff::Kind::Cos
                                                  : bath::HarmonicCoeff::Kind::Sin,
                                   get_number(v, path, "center"),
                                   get_number_or(v, path, "phi", 0.0)};
    }
    if (kind == "tabulated") {
        require_keys(v, path, {"kind"}, {"file", "data"});
        std::vector<double> times;
        std::vector<cplx> values;
        if (v.contains("file") == v.contains("data"))
            fail(path, "tabulated coefficient needs exactly one of 'file' or 'data'");
        if (v.contains("file")) {
            std::string file = v.at("file").get<std::string>();
            if (!base_dir.empty() && !std::filesystem::path(file).is_absolute())
                file = (std::filesystem::path(base_dir) / file).string();
            const auto rows = csv::read_numeric(file, false);
            for (const auto& row : rows) {
                if (row.size() != 3)
                    fail(path + ".file", "expected rows of (t, re, im) in " + file);
                times.push_back(row[0]);
                values.emplace_back(row[1], row[2]);
            }
        } else {
            for (const auto& row : v.at("data")) {
                if (!row.is_array() || row.size() != 3)
                    fail(path + ".data", "expected rows of (t, re, im)");
                times.push_back(row[0].get<double>());
                values.emplace_back(row[1].get<double>(), row[2].get<double>());
            }
        }
        try {
            return bath::make_tabulated(std::move(times), std::move(values));
        } catch (const Error& e) {
            fail(path, e.what());
        }
    }
    fail(path + ".kind", "unknown coefficient kind '" + kind + "'");
}

json coefficient_json(const bath::TimeCoefficient& c) {
    if (const auto* s = std::get_if<bath::StationaryCoeff>(&c))
        return {{"kind", "stationary"}, {"amp", complex_json(s->amp)}, {"freq", s->freq}};
    if (const auto* s = std::get_if<bath::SqueezedCoeff>(&c))
        return {{"kind", "squeezed"},      {"coupling", complex_json(s->coupling)},
                {"center", s->center},     {"r", s->squeeze},
                {"phi", s->phase},         {"detuning", s->detuning},
                {"conj_amp", s->conj_amp}};
    if (const auto* h = std::get_if<bath::HarmonicCoeff>(&c))
        return {{"kind", "harmonic"},
                {"prefactor", h->prefactor},
                {"shape", h->kind == bath::HarmonicCoeff::Kind::Cos ? "cos" : "sin"},
                {"center", h->center},
                {"phi", h->phase}};
    const auto& t = std::get<bath::TabulatedCoeff>(c);
    json grid = json::array();
    for (std::size_t i = 0; i < t.times->size(); ++i)
        grid.push_back(json::array({(*t.times)[i], (*t.values)[i].real(), (*t.values)[i].imag()}));
    return {{"kind", "tabulated"}, {"data", std::move(grid)}};
}

// ---- bath ---------------------------------------------------------------------

std::vector<bath::UniformTerm> parse_terms(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of terms");
    std::vector<bath::UniformTerm> terms;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        require_keys(v[i], p, {"gamma", "omega", "Gamma"}, {});
        bath::UniformTerm t;
        t.gamma = get_complex(v[i].at("gamma"), p + ".gamma");
        t.omega = get_number(v[i], p, "omega");
        t.gamma_rate = get_number(v[i], p, "Gamma");
        if (!(t.gamma_rate > 0.0)) fail(p + ".Gamma", "mode rate must be > 0");
        terms.push_back(t);
    }
    return terms;
}

struct ParsedBath {
    bath::BathModel model;
    double center = 0.0;
    json canonical;
};

ParsedBath parse_bath(const json& v, const std::string& path, const std::string& base_dir) {
    if (!v.is_object() || !v.contains("kind")) fail(path, "expected a bath object with 'kind'");
    const std::string kind = v.at("kind").get<std::string>();
    ParsedBath out;
    json canon{{"kind", kind}};
    const std::set<std::string> extras{"drive", "thermal"};

    auto checked = [&](auto&& builder, const char* what) {
        try {
            return builder();
        } catch (const Error& e) {
            fail(path, std::string(what) + ": " + e.what());
        }
    };

    if (kind == "single_mode_squeezed") {
        std::set<std::string> req{"kind", "gamma", "omega0", "r", "phi", "Gamma"};
        require_keys(v, path, req, extras);
        const double gamma = get_number(v, path, "gamma");
        const double omega0 = get_number(v, path, "omega0");
        const double r = get_number(v, path, "r");
        const double phi = get_number(v, path, "phi");
        const double rate = get_number(v, path, "Gamma");
        if (gamma < 0.0) fail(path + ".gamma", "coupling strength must be >= 0");
        if (r < 0.0) fail(path + ".r", "squeeze parameter must be >= 0");
        if (!(rate > 0.0)) fail(path + ".Gamma", "mode rate must be > 0");
        out.model = checked([&] { return bath::single_mode_squeezed(gamma, omega0, r, phi, rate); },
                            "invalid single_mode_squeezed parameters");
        out.center = omega0;
        canon["gamma"] = gamma;
        canon["omega0"] = omega0;
        canon["r"] = r;
        canon["phi"] = phi;
        canon["Gamma"] = rate;
    } else if (kind == "dpa_three_mode") {
        require_keys(v, path, {"kind", "gamma", "omega0", "Gamma0", "Gamma", "eps", "phi"}, extras);
        const double gamma = get_number(v, path, "gamma");
        const double omega0 = get_number(v, path, "omega0");
        const double g0 = get_number(v, path, "Gamma0");
        const double gc = get_number(v, path, "Gamma");
        const double eps = get_number(v, path, "eps");
        const double phi = get_number(v, path, "phi");
        out.model = checked([&] { return bath::dpa_three_mode(gamma, omega0, g0, gc, eps, phi); },
                            "invalid dpa_three_mode parameters");
        out.center = omega0;
        canon["gamma"] = gamma;
        canon["omega0"] = omega0;
        canon["Gamma0"] = g0;
        canon["Gamma"] = gc;
        canon["eps"] = eps;
        canon["phi"] = phi;
    } else if (kind == "uniform_squeezed_multimode") {
        require_keys(v, path, {"kind", "terms", "r", "phi", "omega0"}, extras);
        const auto terms = parse_terms(v.at("terms"), path + ".terms");
        const double r = get_number(v, path, "r");
        const double phi = get_number(v, path, "phi");
        const double omega0 = get_number(v, path, "omega0");
        if (r < 0.0) fail(path + ".r", "squeeze parameter must be >= 0");
        out.model = checked([&] { return bath::uniform_squeezed_multimode(terms, r, phi, omega0); },
                            "invalid uniform_squeezed_multimode parameters");
        out.center = omega0;
        json jt = json::array();
        for (const auto& t : terms)
            jt.push_back({{"gamma", complex_json(t.gamma)}, {"omega", t.omega},
                          {"Gamma", t.gamma_rate}});
        canon["terms"] = std::move(jt);
        canon["r"] = r;
        canon["phi"] = phi;
        canon["omega0"] = omega0;
    } else if (kind == "stationary") {
        require_keys(v, path, {"kind", "terms"}, extras);
        const auto terms = parse_terms(v.at("terms"), path + ".terms");
        out.model = checked([&] { return bath::stationary_multimode(terms); },
                            "invalid stationary parameters");
        out.center = terms.size() == 1 ? terms[0].omega : 0.0;
        json jt = json::array();
        for (const auto& t : terms)
            jt.push_back({{"gamma", complex_json(t.gamma)}, {"omega", t.omega},
                          {"Gamma", t.gamma_rate}});
        canon["terms"] = std::move(jt);
    } else if (kind == "modes") {
        require_keys(v, path, {"kind", "modes"}, extras);
        const auto& arr = v.at("modes");
        if (!arr.is_array() || arr.empty()) fail(path + ".modes", "expected a non-empty array");
        json jm = json::array();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = path + ".modes[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"Gamma", "f", "g"}, {});
            const double rate = get_number(arr[i], p, "Gamma");
            if (!(rate > 0.0)) fail(p + ".Gamma", "mode rate must be > 0");
            auto f = parse_coefficient(arr[i].at("f"), p + ".f", base_dir);
            auto g = parse_coefficient(arr[i].at("g"), p + ".g", base_dir);
            out.model.modes.push_back(bath::make_mode(rate, f, g));
            jm.push_back({{"Gamma", rate}, {"f", coefficient_json(f)}, {"g", coefficient_json(g)}});
        }
        canon["modes"] = std::move(jm);
    } else {
        fail(path + ".kind", "unknown bath kind '" + kind + "'");
    }

    if (v.contains("drive")) {
        const auto& arr = v.at("drive");
        if (!arr.is_array()) fail(path + ".drive", "expected an array");
        json jd = json::array();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = path + ".drive[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"coeff", "alpha"}, {});
            bath::DriveTerm term;
            term.g = parse_coefficient(arr[i].at("coeff"), p + ".coeff", base_dir);
            term.alpha = get_complex(arr[i].at("alpha"), p + ".alpha");
            out.model.drive.push_back(term);
            jd.push_back({{"coeff", coefficient_json(term.g)}, {"alpha", complex_json(term.alpha)}});
        }
        canon["drive"] = std::move(jd);
    }
    if (v.contains("thermal")) {
        const auto& arr = v.at("thermal");
        if (!arr.is_array()) fail(path + ".thermal", "expected an array");
        json jt = json::array();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = path + ".thermal[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"coeff", "nbar"}, {});
            bath::ThermalTerm term;
            term.g = parse_coefficient(arr[i].at("coeff"), p + ".coeff", base_dir);
            term.nbar = get_number(arr[i], p, "nbar");
            if (term.nbar < 0.0) fail(p + ".nbar", "thermal occupation must be >= 0");
            out.model.thermal.push_back(term);
            jt.push_back({{"coeff", coefficient_json(term.g)}, {"nbar", term.nbar}});
        }
        canon["thermal"] = std::move(jt);
    }
    out.canonical = std::move(canon);
    return out;
}

fock::TruncationScheme parse_truncation(const json& v, const std::string& path, int mode_count) {
    if (!v.is_object() || !v.contains("kind")) fail(path, "expected a truncation object with 'kind'");
    const std::string kind = v.at("kind").get<std::string>();
    if (kind == "rectangular") {
        require_keys(v, path, {"kind", "nmax"}, {});
        const auto& arr = v.at("nmax");
        if (!arr.is_array() || arr.empty()) fail(path + ".nmax", "expected an array of caps");
        std::vector<int> caps;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number_integer() || arr[i].get<long>() < 0)
                fail(path + ".nmax[" + std::to_string(i) + "]", "expected a non-negative integer");
            caps.push_back(arr[i].get<int>());
        }
        if (static_cast<int>(caps.size()) != mode_count)
            fail(path + ".nmax", "expected " + std::to_string(mode_count) +
                                     " entries (one per bath mode)");
        return fock::TruncationScheme::rectangular(std::move(caps));
    }
    if (kind == "triangular") {
        require_keys(v, path, {"kind", "nsum"}, {});
        if (!v.at("nsum").is_number_integer() || v.at("nsum").get<long>() < 0)
            fail(path + ".nsum", "expected a non-negative integer");
        return fock::TruncationScheme::triangular(v.at("nsum").get<int>(), mode_count);
    }
    fail(path + ".kind", "unknown truncation kind '" + kind + "'");
}

json truncation_json(const fock::TruncationScheme& t) {
    if (t.kind == fock::TruncationScheme::Kind::Rectangular) {
        json caps = json::array();
        for (int c : t.nmax) caps.push_back(c);
        return {{"kind", "rectangular"}, {"nmax", std::move(caps)}};
    }
    return {{"kind", "triangular"}, {"nsum", t.nsum}};
}

sim::NoiseRoute parse_noise(const std::string& name, const std::string& path) {
    if (name == "auto") return sim::NoiseRoute::Auto;
    if (name == "covariance") return sim::NoiseRoute::Covariance;
    if (name == "ou") return sim::NoiseRoute::OrnsteinUhlenbeck;
    fail(path, "expected 'auto', 'covariance' or 'ou'");
}

const char* noise_name(sim::NoiseRoute r) {
    switch (r) {
        case sim::NoiseRoute::Auto: return "auto";
        case sim::NoiseRoute::Covariance: return "covariance";
        case sim::NoiseRoute::OrnsteinUhlenbeck: return "ou";
    }
    return "auto";
}

long steps_from(double horizon, double step, const std::string& path) {
    if (!(step > 0.0)) fail(path, "step must be > 0");
    const double ratio = horizon / step;
    const long steps = std::lround(ratio);
    if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
        fail(path, "step must divide the horizon into an integer number of steps");
    return steps;
}

} // namespace

ParsedConfig parse_config(const std::string& text, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    require_keys(root, "config",
                 {"schema", "system", "bath", "method", "truncation", "horizon", "step"},
                 {"stored_points", "trajectories", "seed", "noise", "threads", "output",
                  "rotating_frame", "reference"});
    if (get_integer(root, "config", "schema") != 1) fail("config.schema", "unsupported schema version");

    const auto& sys = root.at("system");
    require_keys(sys, "config.system", {"hamiltonian", "coupling", "initial_state"}, {});
    Eigen::MatrixXcd h = get_matrix(sys.at("hamiltonian"), "config.system.hamiltonian");
    Eigen::MatrixXcd l = get_matrix(sys.at("coupling"), "config.system.coupling");
    Eigen::VectorXcd psi0 = get_vector(sys.at("initial_state"), "config.system.initial_state");
    bath::SystemModel system;
    try {
        system = bath::make_system(std::move(h), std::move(l));
    } catch (const Error& e) {
        fail("config.system", e.what());
    }
    if (psi0.size() != system.dim)
        fail("config.system.initial_state", "dimension does not match the system operators");
    if (!(psi0.norm() > 0.0)) fail("config.system.initial_state", "zero norm");

    ParsedBath parsed_bath = parse_bath(root.at("bath"), "config.bath", base_dir);

    const std::string method_str = root.at("method").is_string()
                                       ? root.at("method").get<std::string>()
                                       : std::string();
    const auto method = sim::method_from_name(method_str);
    if (!method)
        fail("config.method",
             "unknown method '" + method_str +
                 "' (expected hops-linear, hops-nonlinear, hme, pme, psse-linear, psse-nonlinear)");

    if ((*method == sim::Method::Pme || *method == sim::Method::PsseLinear ||
         *method == sim::Method::PsseNonlinear) &&
        !parsed_bath.model.pseudomode_ok())
        fail("config.method", "method '" + method_str +
                                  "' requires f_j = g_j for all modes "
                                  "(pseudomode-compatible bath)");

    ParsedConfig out;
    out.spec.system = system;
    out.spec.bath_model = parsed_bath.model;
    out.spec.truncation = parse_truncation(root.at("truncation"), "config.truncation",
                                           parsed_bath.model.mode_count());
    out.spec.initial_state = psi0;
    out.spec.method = *method;
    out.spec.horizon = get_number(root, "config", "horizon");
    if (!(out.spec.horizon > 0.0)) fail("config.horizon", "must be > 0");
    const double step = get_number(root, "config", "step");
    out.spec.steps = steps_from(out.spec.horizon, step, "config.step");

    out.spec.stored_points = static_cast<int>(root.contains("stored_points")
                                                  ? get_integer(root, "config", "stored_points")
                                                  : 1000);
    if (out.spec.stored_points < 1) fail("config.stored_points", "must be >= 1");
    if (out.spec.steps % out.spec.stored_points != 0)
        fail("config.stored_points", "must divide the step count (" +
                                         std::to_string(out.spec.steps) + " steps)");

    if (sim::is_stochastic(*method)) {
        if (!root.contains("trajectories"))
            fail("config.trajectories", "required for stochastic methods");
        out.spec.trajectories = get_integer(root, "config", "trajectories");
        if (out.spec.trajectories < 1) fail("config.trajectories", "must be >= 1");
    } else if (root.contains("trajectories")) {
        out.spec.trajectories = get_integer(root, "config", "trajectories");
    }
    if (!sim::is_stochastic(*method) && parsed_bath.model.has_thermal())
        fail("config.bath.thermal", "thermal noise requires a stochastic method");

    out.spec.seed = root.contains("seed")
                        ? static_cast<std::uint64_t>(get_integer(root, "config", "seed"))
                        : 0;
    const std::string noise_str =
        root.contains("noise") ? root.at("noise").get<std::string>() : std::string("auto");
    out.spec.noise = parse_noise(noise_str, "config.noise");
    if (out.spec.noise == sim::NoiseRoute::OrnsteinUhlenbeck &&
        !parsed_bath.model.pseudomode_ok())
        fail("config.noise", "the 'ou' route requires f_j = g_j for all modes");
    out.spec.threads = root.contains("threads")
                           ? static_cast<int>(get_integer(root, "config", "threads"))
                           : 0;
    out.spec.rot_omega0 = root.contains("rotating_frame")
                              ? get_number(root, "config", "rotating_frame")
                              : parsed_bath.center;
    if (root.contains("output")) out.output = root.at("output").get<std::string>();

    // Reference block: partial overrides used by scans and error reports.
    if (root.contains("reference")) {
        const auto& ref = root.at("reference");
        require_keys(ref, "config.reference", {},
                     {"method", "truncation", "step", "trajectories", "seed", "noise"});
        out.reference = out.spec;
        if (ref.contains("method")) {
            const auto rm = sim::method_from_name(ref.at("method").get<std::string>());
            if (!rm) fail("config.reference.method", "unknown method");
            out.reference.method = *rm;
        }
        if (ref.contains("truncation"))
            out.reference.truncation = parse_truncation(ref.at("truncation"),
                                                        "config.reference.truncation",
                                                        parsed_bath.model.mode_count());
        if (ref.contains("step"))
            out.reference.steps = steps_from(out.spec.horizon,
                                             get_number(ref, "config.reference", "step"),
                                             "config.reference.step");
        if (ref.contains("trajectories"))
            out.reference.trajectories = get_integer(ref, "config.reference", "trajectories");
        if (ref.contains("seed"))
            out.reference.seed =
                static_cast<std::uint64_t>(get_integer(ref, "config.reference", "seed"));
        if (ref.contains("noise"))
            out.reference.noise =
                parse_noise(ref.at("noise").get<std::string>(), "config.reference.noise");
        out.has_reference = true;
    }

    // Fully resolved canonical form (sorted keys, defaults filled in).
    json canon;
    canon["schema"] = 1;
    canon["system"] = {{"hamiltonian", matrix_json(out.spec.system.hamiltonian)},
                       {"coupling", matrix_json(out.spec.system.coupling)},
                       {"initial_state", vector_json(out.spec.initial_state)}};
    canon["bath"] = parsed_bath.canonical;
    canon["method"] = method_str;
    canon["truncation"] = truncation_json(out.spec.truncation);
    canon["horizon"] = out.spec.horizon;
    canon["step"] = out.spec.horizon / static_cast<double>(out.spec.steps);
    canon["stored_points"] = out.spec.stored_points;
    if (sim::is_stochastic(*method)) canon["trajectories"] = out.spec.trajectories;
    canon["seed"] = out.spec.seed;
    canon["noise"] = noise_name(out.spec.noise);
    canon["threads"] = out.spec.threads;
    canon["rotating_frame"] = out.spec.rot_omega0;
    if (!out.output.empty()) canon["output"] = out.output;
    if (out.has_reference) {
        json ref;
        ref["method"] = sim::method_name(out.reference.method);
        ref["truncation"] = truncation_json(out.reference.truncation);
        ref["step"] = out.spec.horizon / static_cast<double>(out.reference.steps);
        if (sim::is_stochastic(out.reference.method))
            ref["trajectories"] = out.reference.trajectories;
        ref["seed"] = out.reference.seed;
        ref["noise"] = noise_name(out.reference.noise);
        canon["reference"] = std::move(ref);
    }
    out.canonical = canon.dump(2) + "\n";
    return out;
}

ParsedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return parse_config(ss.str(), dir);
}

std::string version_string() { return "nshops 0.1.0"; }

std::string schema_text() {
    return R"json({
  "schema": 1,
  "system": {
    "hamiltonian": "[[complex, ...], ...]  (complex = number or [re, im])",
    "coupling": "[[complex, ...], ...]     (Hermitian, same dimension)",
    "initial_state": "[complex, ...]       (pure state, normalized internally)"
  },
  "bath": {
    "kind": "single_mode_squeezed | dpa_three_mode | uniform_squeezed_multimode | stationary | modes",
    "single_mode_squeezed": {"gamma": 1.0, "omega0": 5.0, "r": 1.5, "phi": 0.0, "Gamma": 1.0},
    "dpa_three_mode": {"gamma": 1.0, "omega0": 5.0, "Gamma0": 2.0, "Gamma": 1.0, "eps": 0.5, "phi": 3.141592653589793},
    "uniform_squeezed_multimode": {"terms": [{"gamma": "[re,im]", "omega": 5.0, "Gamma": 1.0}], "r": 1.5, "phi": 0.0, "omega0": 5.0},
    "stationary": {"terms": [{"gamma": "[re,im]", "omega": 5.0, "Gamma": 1.0}]},
    "modes": {"modes": [{"Gamma": 1.0, "f": "<coefficient>", "g": "<coefficient>"}]},
    "coefficient kinds": {
      "stationary": {"amp": "[re,im]", "freq": 5.0},
      "squeezed": {"coupling": "[re,im]", "center": 5.0, "r": 1.5, "phi": 0.0, "detuning": 0.0, "conj_amp": false},
      "harmonic": {"prefactor": 1.0, "shape": "cos | sin", "center": 5.0, "phi": 0.0},
      "tabulated": {"file": "two-column CSV path: t, re, im"}
    },
    "drive (optional)": [{"coeff": "<coefficient>", "alpha": "[re,im]"}],
    "thermal (optional, stochastic methods)": [{"coeff": "<coefficient>", "nbar": 0.5}]
  },
  "method": "hops-linear | hops-nonlinear | hme | pme | psse-linear | psse-nonlinear",
  "truncation": {"kind": "rectangular", "nmax": [60]},
  "horizon": 10.0,
  "step": 0.0001,
  "stored_points": 1000,
  "trajectories": 10000,
  "seed": 1,
  "noise": "auto | covariance | ou",
  "threads": 0,
  "rotating_frame": 5.0,
  "output": "run.csv",
  "reference": {"method": "...", "truncation": {}, "step": 0.0001, "trajectories": 100000, "seed": 2, "noise": "auto"}
})json";
}

} // namespace nshops::config
