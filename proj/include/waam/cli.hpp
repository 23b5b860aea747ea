#ifndef WAAM_CLI_HPP
#define WAAM_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "waam/experiment_harness.hpp"
#include "waam/results_io.hpp"
#include "waam/run_config.hpp"

namespace waam::cli {

enum ExitCode : int {
    ok = 0,
    config_error = 2,
    infeasible_geometry = 3,
    solver_failure = 4,
    io_error = 5,
};

namespace detail {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    bool verbose = false;
    // calibrate
    std::string samples;
    std::string label;
};

inline RunConfig load_config(const Options& o)
{
    if (o.config.empty())
        throw ValidationError("--config is required for this subcommand");
    if (!std::filesystem::exists(o.config))
        throw ValidationError("config file '" + o.config + "' does not exist");
    RunConfig cfg = RunConfig::load(o.config);
    for (const auto& s : o.overrides)
        cfg.set(s);
    if (o.seed)
        cfg.set_seed(*o.seed);
    return cfg;
}

inline std::filesystem::path out_dir(const Options& o, const std::string& cmd, std::uint64_t seed)
{
    if (!o.out.empty())
        return o.out;
    return std::filesystem::path("runs") / (cmd + "-seed" + std::to_string(seed));
}

inline void print_summary(std::ostream& os, const ComparisonReport& rep)
{
    os << std::left << std::setw(10) << "Case" << std::right << std::setw(20) << "Maximum RMSE (mm)"
       << std::setw(24) << "Final Layer RMSE (mm)" << '\n';
    os << std::fixed << std::setprecision(4);
    for (const auto& r : rep.rows)
        os << std::left << std::setw(10) << r.scenario << std::right << std::setw(20) << r.max_rmse
           << std::setw(24) << r.final_rmse << '\n';
    os.unsetf(std::ios::floatfield);
    os << "segments per layer: " << rep.n_segments << ", seed: " << rep.seed << '\n';
}

inline void print_layers(std::ostream& os, const RunTrace& t)
{
    for (const auto& r : t.layers) {
        os << t.scenario << " layer " << r.layer << ": rmse=" << r.rmse << " max|e|=" << r.max_abs_e
           << " lambda=" << r.lambda;
        if (!r.solver_status.empty())
            os << " solver=" << r.solver_status << '/' << r.solver_iterations;
        if (r.standoff_exceeded)
            os << " STANDOFF";
        os << '\n';
    }
}

inline int cmd_calibrate(const Options& o, std::ostream& os)
{
    const std::vector<CalibrationSample> samples =
        o.samples == "-" ? io::read_calibration_samples(std::cin, std::string("<stdin>"))
                         : io::read_calibration_samples(std::filesystem::path(o.samples));
    const CalibrationResult fit = calibrate(samples, o.label);
    std::filesystem::path dest = o.out.empty() ? std::filesystem::path("coefficients.json") : std::filesystem::path(o.out);
    if (std::filesystem::is_directory(dest))
        dest /= "coefficients.json";
    if (dest.has_parent_path())
        std::filesystem::create_directories(dest.parent_path());
    io::write_coefficients(dest, fit);
    os << std::setprecision(10) << "fit of " << fit.sample_count << " samples: a = " << fit.coeffs.a
       << ", b = " << fit.coeffs.b << ", R^2 = " << fit.r_squared << '\n';
    if (!(fit.coeffs.a < 0.0))
        os << "warning: fitted exponent is not negative; the model will be rejected for planning\n";
    os << "wrote " << dest.string() << '\n';
    return ok;
}

/// Reports plan geometry and whether both models can realise it inside the speed bounds.
inline NominalPlan report_plan(const ScenarioSpec& spec, std::ostream& os)
{
    const NominalPlan plan = build_nominal_plan(spec);
    int tilted = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& lp : plan.layers) {
        tilted += lp.tilted ? 1 : 0;
        lo = std::min(lo, lp.dh_nom.minCoeff());
        hi = std::max(hi, lp.dh_nom.maxCoeff());
    }
    os << std::setprecision(8);
    os << "theta_max: " << plan.theta_max << " rad\n";
    os << "theta used: " << plan.geometry.theta_step << " rad\n";
    os << "layers: " << plan.layers.size() << " (" << plan.layers.size() - tilted << " base, " << tilted
       << " tilted)\n";
    os << "dh_nom range: [" << lo << ", " << hi << "] mm within [" << spec.bounds.dh_min << ", "
       << spec.bounds.dh_max << "]\n";
    os << "bound margins: lower " << lo - spec.bounds.dh_min << " mm, upper " << spec.bounds.dh_max - hi
       << " mm\n";
    const auto speeds = nominal_velocity_plan(plan.layers, spec.planning_coefficients(), spec.bounds);
    double vlo = std::numeric_limits<double>::infinity(), vhi = -vlo;
    for (const auto& p : speeds) {
        vlo = std::min(vlo, p.v_t.minCoeff());
        vhi = std::max(vhi, p.v_t.maxCoeff());
    }
    os << "nominal speeds (" << spec.planning_coefficients().label << " model): [" << vlo << ", " << vhi
       << "] mm/s within [" << spec.bounds.v_t_min << ", " << spec.bounds.v_t_max << "]\n";
    return plan;
}

inline int cmd_plan(const Options& o, std::ostream& os, bool write)
{
    const RunConfig cfg = load_config(o);
    const ScenarioSpec spec = cfg.scenario();
    const NominalPlan plan = report_plan(spec, os);
    os << "verdict: feasible\n";
    if (write) {
        const auto dir = out_dir(o, "plan", spec.sensor.seed);
        std::filesystem::create_directories(dir);
        io::write_json(dir / "plan.json", io::plan_document(plan, spec.bounds));
        io::write_json(dir / "manifest.json",
                       io::json{{"seed", spec.sensor.seed}, {"artifacts", io::json::array({"plan.json"})}});
        os << "wrote " << (dir / "plan.json").string() << '\n';
    }
    return ok;
}

inline int finish_run(const Options& o, std::ostream& os, const std::string& cmd, const std::vector<RunTrace>& traces)
{
    const auto dir = out_dir(o, cmd, traces.front().seed);
    io::export_results(traces, dir);
    if (o.verbose)
        for (const auto& t : traces)
            print_layers(os, t);
    print_summary(os, compare_scenarios(traces));
    for (const auto& t : traces)
        for (const auto& r : t.layers)
            if (r.standoff_exceeded) {
                os << t.scenario << ": torch standoff limit exceeded from layer " << r.layer << '\n';
                break;
            }
    os << "artifacts in " << dir.string() << '\n';
    return ok;
}

inline int run_guarded(const Options& o, std::ostream& os, std::ostream& es, const std::string& cmd,
                       const auto& body)
{
    try {
        return body();
    } catch (const ScenarioFailure& e) {
        es << "error: " << e.what() << '\n';
        if (!e.partial_trace().layers.empty()) {
            try {
                const auto dir = out_dir(o, cmd, e.partial_trace().seed) / "partial";
                io::export_results({e.partial_trace()}, dir);
                es << "partial trace written to " << dir.string() << '\n';
            } catch (const Error&) {
            }
        }
        return solver_failure;
    } catch (const GeometryInfeasibleError& e) {
        es << "infeasible: " << e.what() << '\n';
        os << "verdict: infeasible\n";
        return infeasible_geometry;
    } catch (const PlanInfeasibleError& e) {
        es << "infeasible: " << e.what() << '\n';
        os << "verdict: infeasible\n";
        return infeasible_geometry;
    } catch (const SolverError& e) {
        es << "solver failure: " << e.what() << '\n';
        return solver_failure;
    } catch (const IoError& e) {
        es << "I/O error: " << e.what() << '\n';
        return io_error;
    } catch (const std::filesystem::filesystem_error& e) {
        es << "I/O error: " << e.what() << '\n';
        return io_error;
    } catch (const Error& e) {
        es << "error: " << e.what() << '\n';
        return config_error;
    }
}

} // namespace detail

/// Runs the command line given as `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& os = std::cout, std::ostream& es = std::cerr)
{
    detail::Options o;
    CLI::App app{"Closed-loop layer-height planning and simulation for wire-arc additive manufacturing", "waam"};
    app.require_subcommand(1, 1);

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", o.config, "run configuration (INI)");
        if (needs_config)
            c->required();
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "override sensor.seed");
        sub->add_option("--set", o.overrides, "override a config value, section.key=value")->take_all();
        sub->add_flag("--verbose,-v", o.verbose, "print per-layer details");
    };

    auto* calibrate_cmd = app.add_subcommand("calibrate", "fit (a, b) to a v_t,dh sample file");
    calibrate_cmd->add_option("samples", o.samples, "sample file, or - for stdin")->required();
    calibrate_cmd->add_option("--label", o.label, "label stored with the coefficients");
    calibrate_cmd->add_option("--out", o.out, "coefficient file or directory");
    calibrate_cmd->add_flag("--verbose,-v", o.verbose);

    auto* plan_cmd = app.add_subcommand("plan", "slice the part and export the layer plan");
    add_common(plan_cmd, true);
    auto* simulate_cmd = app.add_subcommand("simulate", "run the configured scenario against the plant");
    add_common(simulate_cmd, true);
    auto* compare_cmd = app.add_subcommand("compare", "run OC, OH, CC and CH and compare them");
    add_common(compare_cmd, true);
    auto* feas_cmd = app.add_subcommand("check-feasibility", "check the part against the process envelope");
    add_common(feas_cmd, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        os << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        os << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        es << "usage error: " << e.what() << '\n' << app.help();
        return config_error;
    }

    if (*calibrate_cmd)
        return detail::run_guarded(o, os, es, "calibrate", [&] { return detail::cmd_calibrate(o, os); });
    if (*plan_cmd)
        return detail::run_guarded(o, os, es, "plan", [&] { return detail::cmd_plan(o, os, true); });
    if (*feas_cmd)
        return detail::run_guarded(o, os, es, "check-feasibility", [&] {
            const ScenarioSpec spec = detail::load_config(o).scenario();
            const NominalPlan plan = detail::report_plan(spec, os);
            // Both models must realise the shared plan inside the speed bounds.
            nominal_velocity_plan(plan.layers, spec.cold, spec.bounds);
            nominal_velocity_plan(plan.layers, spec.hot, spec.bounds);
            os << "verdict: feasible for both models\n";
            return int{ok};
        });
    if (*simulate_cmd)
        return detail::run_guarded(o, os, es, "simulate", [&] {
            const ScenarioSpec spec = detail::load_config(o).scenario();
            return detail::finish_run(o, os, "simulate", {run_scenario(spec)});
        });
    return detail::run_guarded(o, os, es, "compare", [&] {
        const ScenarioSpec spec = detail::load_config(o).scenario();
        return detail::finish_run(o, os, "compare", run_four_cases(spec));
    });
}

inline int run(int argc, char** argv)
{
    return run(std::vector<std::string>(argv + 1, argv + argc));
}

} // namespace waam::cli

#endif // WAAM_CLI_HPP
