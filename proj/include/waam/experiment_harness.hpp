#ifndef WAAM_EXPERIMENT_HARNESS_HPP
#define WAAM_EXPERIMENT_HARNESS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "waam/correction_controller.hpp"
#include "waam/deposition_model.hpp"
#include "waam/layer_planner.hpp"
#include "waam/plant_simulator.hpp"

namespace waam {

enum class Feedback { open_loop, closed_loop };
enum class PlanningModel { cold, hot };

inline std::string to_string(Feedback f) { return f == Feedback::open_loop ? "open-loop" : "closed-loop"; }
inline std::string to_string(PlanningModel m) { return m == PlanningModel::cold ? "cold" : "hot"; }

struct ScenarioSpec {
    Feedback feedback = Feedback::closed_loop;
    PlanningModel planning_model = PlanningModel::cold;
    PartSpec part;
    /// Speed bounds plus the height envelope the shared plan must respect.
    ProcessBounds bounds;
    SolverConfig solver;
    ThermalConfig thermal;
    SensorConfig sensor;
    ModelCoefficients cold = cold_model();
    ModelCoefficients hot = hot_model();
    Eigen::Index n_segments = 50;
    /// Tilt increment to use instead of the maximum feasible one.
    std::optional<double> theta_override;
    /// Largest |e| (mm) before torch standoff is considered lost.
    double standoff_limit = 10.0;

    /// Two-letter case code: O/C for feedback, C/H for the planning model.
    std::string name() const
    {
        std::string s;
        s += feedback == Feedback::open_loop ? 'O' : 'C';
        s += planning_model == PlanningModel::cold ? 'C' : 'H';
        return s;
    }

    const ModelCoefficients& planning_coefficients() const
    {
        return planning_model == PlanningModel::cold ? cold : hot;
    }

    void validate() const
    {
        part.validate();
        bounds.validate();
        solver.validate();
        thermal.validate();
        sensor.validate();
        validate_model(cold);
        validate_model(hot);
        if (n_segments < 2)
            throw ValidationError("scenario: n_segments must be at least 2");
        if (!(standoff_limit > 0.0))
            throw ValidationError("scenario: standoff_limit must be positive");
    }
};

struct LayerRecord {
    int layer = 0;
    Vector h_d;
    Vector dh_target;
    Vector v_t_applied;
    Vector h_measured;
    Vector h_true;
    Vector e;
    double rmse = 0.0;
    double max_abs_e = 0.0;
    /// Plant temperature the layer was welded at.
    double lambda = 0.0;
    bool standoff_exceeded = false;
    // Solver diagnostics; defaults for open-loop layers.
    double objective = 0.0;
    int solver_iterations = 0;
    std::string solver_status;
    int active_bound_count = 0;
};

struct RunTrace {
    std::string scenario;
    Feedback feedback = Feedback::closed_loop;
    PlanningModel planning_model = PlanningModel::cold;
    std::uint64_t seed = 0;
    Eigen::Index n_segments = 0;
    double theta_max = 0.0;
    double theta_used = 0.0;
    ProcessBounds bounds;
    std::vector<LayerRecord> layers;

    Vector rmse_series() const
    {
        Vector r(static_cast<Eigen::Index>(layers.size()));
        for (std::size_t i = 0; i < layers.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = layers[i].rmse;
        return r;
    }

    double max_rmse() const { return layers.empty() ? 0.0 : rmse_series().maxCoeff(); }
    double final_rmse() const { return layers.empty() ? 0.0 : layers.back().rmse; }
};

/// Raised when a run aborts part-way; the layers completed so far are kept.
class ScenarioFailure : public SolverError {
public:
    ScenarioFailure(const std::string& what, RunTrace partial)
        : SolverError(what), partial_(std::move(partial))
    {
    }
    const RunTrace& partial_trace() const { return partial_; }

private:
    RunTrace partial_;
};

inline double layer_rmse(const Vector& e)
{
    if (e.size() == 0)
        throw ShapeError("layer_rmse: empty error vector");
    return e.norm() / std::sqrt(static_cast<double>(e.size()));
}

inline double layer_rmse(const LayerError& e) { return layer_rmse(e.e); }

/// Geometry, chosen tilt increment and layer plans shared by every case of a spec.
struct NominalPlan {
    SliceGeometry geometry;
    double theta_max = 0.0;
    std::vector<LayerPlan> layers;
};

inline NominalPlan build_nominal_plan(const ScenarioSpec& spec)
{
    spec.validate();
    NominalPlan plan;
    plan.geometry = compute_slice_geometry(spec.part, spec.n_segments);
    plan.theta_max = max_angle_increment(plan.geometry, spec.bounds);
    plan.geometry.theta_step = spec.theta_override.value_or(plan.theta_max);
    plan.layers =
        generate_layer_plans(spec.part, plan.geometry, spec.planning_coefficients(), spec.bounds);
    return plan;
}

/**
 * Simulates one build against the drifting plant.
 *
 * Open loop replays the nominal speed plan. Closed loop corrects each
 * layer's target with the previous measured error and re-solves for the
 * speeds. The build starts from a flat, error-free substrate.
 */
inline RunTrace run_scenario(const ScenarioSpec& spec)
{
    const NominalPlan plan = build_nominal_plan(spec);
    const ModelCoefficients& model = spec.planning_coefficients();
    const Eigen::Index n = spec.n_segments;

    std::vector<VelocityProfile> open_loop;
    if (spec.feedback == Feedback::open_loop)
        open_loop = nominal_velocity_plan(plan.layers, model, spec.bounds);

    RunTrace trace;
    trace.scenario = spec.name();
    trace.feedback = spec.feedback;
    trace.planning_model = spec.planning_model;
    trace.seed = spec.sensor.seed;
    trace.n_segments = n;
    trace.theta_max = plan.theta_max;
    trace.theta_used = plan.geometry.theta_step;
    trace.bounds = spec.bounds;
    trace.layers.reserve(plan.layers.size());

    DepositionPlant plant(n, spec.cold, spec.hot, spec.thermal, spec.bounds);
    HeightSensor sensor(spec.sensor);
    LayerError prev{0, Vector::Zero(n)};

    for (std::size_t i = 0; i < plan.layers.size(); ++i) {
        const LayerPlan& lp = plan.layers[i];
        LayerRecord rec;
        rec.layer = lp.layer_index;
        rec.h_d = lp.h_d;

        if (spec.feedback == Feedback::open_loop) {
            rec.dh_target = lp.dh_nom;
            rec.v_t_applied = open_loop[i].v_t;
        } else {
            rec.dh_target = corrected_target(lp.dh_nom, prev);
            SolveResult sol = solve_velocity_profile(rec.dh_target, model, spec.bounds, spec.solver);
            rec.objective = sol.diagnostics.objective;
            rec.solver_iterations = sol.diagnostics.iterations;
            rec.solver_status = sol.diagnostics.status;
            for (auto a : sol.diagnostics.active_bounds)
                rec.active_bound_count += a != 0 ? 1 : 0;
            if (!sol.diagnostics.converged)
                throw ScenarioFailure(trace.scenario + ": solver " + sol.diagnostics.status +
                                          " at layer " + std::to_string(lp.layer_index) +
                                          " (projected gradient " +
                                          std::to_string(sol.diagnostics.projected_gradient_norm) + ")",
                                      trace);
            rec.v_t_applied = std::move(sol.profile.v_t);
        }

        const DepositResult dep = plant.deposit(rec.v_t_applied);
        rec.lambda = dep.lambda_at_weld;
        rec.h_true = dep.state.h_true;
        rec.h_measured = sensor.measure(dep.state);
        prev = layer_error(rec.h_measured, lp.h_d, lp.layer_index);
        rec.e = prev.e;
        rec.rmse = layer_rmse(prev);
        rec.max_abs_e = prev.e.lpNorm<Eigen::Infinity>();
        rec.standoff_exceeded = rec.max_abs_e > spec.standoff_limit;
        trace.layers.push_back(std::move(rec));
    }
    return trace;
}

/// The four cases sharing plan, plant and sensor seed, ordered OC, OH, CC, CH.
inline std::array<ScenarioSpec, 4> four_cases(const ScenarioSpec& base)
{
    std::array<ScenarioSpec, 4> out{base, base, base, base};
    out[0].feedback = out[1].feedback = Feedback::open_loop;
    out[2].feedback = out[3].feedback = Feedback::closed_loop;
    out[0].planning_model = out[2].planning_model = PlanningModel::cold;
    out[1].planning_model = out[3].planning_model = PlanningModel::hot;
    return out;
}

/// Runs the four cases concurrently; each owns its plant and sensor.
inline std::vector<RunTrace> run_four_cases(const ScenarioSpec& base)
{
    const auto specs = four_cases(base);
    std::vector<std::future<RunTrace>> jobs;
    for (const auto& s : specs)
        jobs.push_back(std::async(std::launch::async, [s] { return run_scenario(s); }));
    std::vector<RunTrace> traces;
    for (auto& j : jobs)
        traces.push_back(j.get());
    return traces;
}

/// Maximum and final-layer RMSE observed on the physical build for a case code.
struct ReferenceResult {
    double max_rmse;
    double final_rmse;
};

inline std::optional<ReferenceResult> physical_reference(const std::string& scenario)
{
    if (scenario == "OC") return ReferenceResult{47.73, 47.73};
    if (scenario == "OH") return ReferenceResult{10.55, 10.55};
    if (scenario == "CC") return ReferenceResult{1.41, 1.18};
    if (scenario == "CH") return ReferenceResult{1.99, 0.57};
    return std::nullopt;
}

struct ComparisonRow {
    std::string scenario;
    double max_rmse = 0.0;
    double final_rmse = 0.0;
    std::optional<ReferenceResult> reference;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    Eigen::Index n_segments = 0;
    std::uint64_t seed = 0;
    /// layers x scenarios
    Eigen::MatrixXd per_layer_rmse;
    /// per_layer_rmse minus its first column
    Eigen::MatrixXd difference_from_first;
};

inline ComparisonReport compare_scenarios(const std::vector<RunTrace>& traces)
{
    if (traces.empty())
        throw ComparisonError("compare_scenarios: no traces");
    const std::size_t layers = traces.front().layers.size();
    for (const auto& t : traces) {
        if (t.layers.size() != layers)
            throw ComparisonError("compare_scenarios: '" + t.scenario + "' has " +
                                  std::to_string(t.layers.size()) + " layers, expected " +
                                  std::to_string(layers));
        if (t.seed != traces.front().seed)
            throw ComparisonError("compare_scenarios: '" + t.scenario + "' uses a different seed");
    }
    if (layers == 0)
        throw ComparisonError("compare_scenarios: traces have no layers");

    ComparisonReport rep;
    rep.seed = traces.front().seed;
    rep.n_segments = traces.front().n_segments;
    rep.per_layer_rmse.resize(static_cast<Eigen::Index>(layers), static_cast<Eigen::Index>(traces.size()));
    for (std::size_t j = 0; j < traces.size(); ++j) {
        const auto& t = traces[j];
        rep.rows.push_back({t.scenario, t.max_rmse(), t.final_rmse(), physical_reference(t.scenario)});
        rep.per_layer_rmse.col(static_cast<Eigen::Index>(j)) = t.rmse_series();
    }
    rep.difference_from_first = rep.per_layer_rmse.colwise() - rep.per_layer_rmse.col(0);
    return rep;
}

} // namespace waam

#endif // WAAM_EXPERIMENT_HARNESS_HPP
