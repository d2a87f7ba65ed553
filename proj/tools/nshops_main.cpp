// nshops — batch front-end: run configurations, parameter scans, and
// statistical validation of the noise generators.

#include "nshops/config.hpp"
#include "nshops/csv.hpp"
#include "nshops/exceptions.hpp"
#include "nshops/simulate.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace nshops;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    long seed_override = -1;
    int threads = 0;
};

std::string resolve_out(const CommonFlags& flags, const std::string& name) {
    if (flags.out_dir.empty()) return name;
    std::filesystem::create_directories(flags.out_dir);
    return (std::filesystem::path(flags.out_dir) / name).string();
}

config::ParsedConfig load_with_overrides(const CommonFlags& flags) {
    auto parsed = config::load_config_file(flags.config_path);
    if (flags.seed_override >= 0) {
        parsed.spec.seed = static_cast<std::uint64_t>(flags.seed_override);
        parsed.reference.seed = parsed.spec.seed + 1;
    }
    if (flags.threads > 0) {
        parsed.spec.threads = flags.threads;
        parsed.reference.threads = flags.threads;
    }
    return parsed;
}

void write_sidecar(const std::string& csv_path, const config::ParsedConfig& parsed,
                   long discarded) {
    nlohmann::json meta;
    meta["version"] = config::version_string();
    meta["seed_used"] = parsed.spec.seed;
    meta["discarded_trajectories"] = discarded;
    meta["config"] = nlohmann::json::parse(parsed.canonical);
    std::ofstream out(csv_path + ".meta.json", std::ios::binary | std::ios::trunc);
    out << meta.dump(2) << "\n";
}

int cmd_run(const CommonFlags& flags) {
    auto parsed = load_with_overrides(flags);
    const std::string out_name = parsed.output.empty() ? "run.csv" : parsed.output;
    const std::string out_path = resolve_out(flags, out_name);
    long discarded = 0;
    if (sim::is_stochastic(parsed.spec.method)) {
        const auto result = sim::run_stochastic(parsed.spec);
        discarded = result.discarded;
        sim::write_ensemble_csv(out_path, result);
        std::printf("wrote %s (%ld trajectories, %ld discarded)\n", out_path.c_str(),
                    result.completed, result.discarded);
    } else {
        const auto result = sim::run_deterministic(parsed.spec);
        sim::write_series_csv(out_path, result, parsed.spec.rot_omega0);
        std::printf("wrote %s (%zu stored points)\n", out_path.c_str(), result.times.size());
    }
    write_sidecar(out_path, parsed, discarded);
    return 0;
}

int cmd_scan(const CommonFlags& flags, const std::string& axis,
             const std::vector<double>& values) {
    auto parsed = load_with_overrides(flags);
    if (!parsed.has_reference)
        throw ConfigError("scan requires a 'reference' block in the config");
    const auto points = sim::scan_axis(parsed.spec, axis, values, parsed.reference);
    const std::string out_name =
        (parsed.output.empty() ? std::string("scan") : parsed.output) + "." + axis + ".csv";
    const std::string out_path = resolve_out(flags, out_name);
    csv::Writer w(out_path);
    if (!points.empty() && points.front().has_sources)
        w.header({axis, "r", "r_trunc", "r_step"});
    else
        w.header({axis, "r"});
    for (const auto& p : points) {
        if (p.has_sources)
            w.row({p.value, p.r, p.r_trunc, p.r_step});
        else
            w.row({p.value, p.r});
    }
    std::printf("wrote %s (%zu scan points)\n", out_path.c_str(), points.size());
    write_sidecar(out_path, parsed, 0);
    return 0;
}

int cmd_noise_check(const CommonFlags& flags, int points, long draws, const std::string& sampler,
                    int dump_paths) {
    auto parsed = load_with_overrides(flags);
    sim::NoiseRoute route = sim::NoiseRoute::Auto;
    if (sampler == "covariance") route = sim::NoiseRoute::Covariance;
    else if (sampler == "ou") route = sim::NoiseRoute::OrnsteinUhlenbeck;
    else if (sampler != "auto") throw ConfigError("unknown sampler '" + sampler + "'");

    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            parsed.spec.horizon * static_cast<double>(i) / static_cast<double>(points);

    const auto report =
        sim::noise_check(parsed.spec.bath_model, grid, draws, route, parsed.spec.seed);
    const std::string out_path = resolve_out(flags, "noise_check.csv");
    sim::write_noise_check_csv(out_path, report);
    std::printf("noise-check: max |cov - bcf| = %.3f sigma, pseudo = %.3f sigma, "
                "mean = %.3f sigma, clipped mass fraction = %.3g\n",
                report.max_sigma_cov, report.max_sigma_pseudo, report.max_sigma_mean,
                report.clipped_fraction);
    std::printf("%s (report: %s)\n", report.pass ? "PASS (5 sigma)" : "FAIL (5 sigma)",
                out_path.c_str());

    if (dump_paths > 0) {
        RngStream rng(parsed.spec.seed, 999);
        const auto paths =
            noise::sample_noise_eigen(parsed.spec.bath_model, grid, rng, dump_paths);
        const std::string dump_path = resolve_out(flags, "noise_paths.csv");
        csv::Writer w(dump_path);
        w.header({"path", "t", "re_z", "im_z"});
        for (std::size_t p = 0; p < paths.size(); ++p)
            for (std::size_t i = 0; i < paths[p].grid.size(); ++i)
                w.row({static_cast<double>(p), paths[p].grid[i],
                       paths[p].samples(static_cast<Eigen::Index>(i)).real(),
                       paths[p].samples(static_cast<Eigen::Index>(i)).imag()});
        std::printf("wrote %s\n", dump_path.c_str());
    }
    if (!report.pass)
        throw StatisticalError("noise statistics deviate from the model beyond 5 sigma");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulator for open quantum systems in nonstationary Gaussian baths"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string axis = "nmax";
    std::vector<double> values;
    int points = 60;
    long draws = 100000;
    std::string sampler = "auto";
    int dump_paths = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", flags.config_path, "run configuration file");
        if (needs_config) opt->required();
        cmd->add_option("--seed", flags.seed_override, "override the configured seed");
        cmd->add_option("--threads", flags.threads, "worker threads for trajectory fan-out");
        cmd->add_option("--out", flags.out_dir, "output directory");
    };

    auto* run = app.add_subcommand("run", "propagate one configuration and write CSV results");
    add_common(run, true);

    auto* scan = app.add_subcommand("scan", "error scan along one axis against the reference");
    add_common(scan, true);
    scan->add_option("--axis", axis, "nmax | nmax<j> | nsum | trajectories | step")->required();
    scan->add_option("--values", values, "axis values")->required()->delimiter(',');

    auto* noise_cmd =
        app.add_subcommand("noise-check", "validate noise statistics against the model");
    add_common(noise_cmd, true);
    noise_cmd->add_option("--points", points, "grid points over [0, horizon)");
    noise_cmd->add_option("--draws", draws, "number of sampled paths");
    noise_cmd->add_option("--sampler", sampler, "auto | covariance | ou");
    noise_cmd->add_option("--dump-paths", dump_paths, "also write this many sampled paths");

    auto* schema = app.add_subcommand("print-schema", "print the configuration schema");
    add_common(schema, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(flags);
        if (scan->parsed()) return cmd_scan(flags, axis, values);
        if (noise_cmd->parsed()) return cmd_noise_check(flags, points, draws, sampler, dump_paths);
        if (schema->parsed()) {
            std::cout << nshops::config::schema_text() << "\n";
            return 0;
        }
    } catch (const nshops::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return nshops::exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
