#ifndef WAAM_CORRECTION_CONTROLLER_HPP
#define WAAM_CORRECTION_CONTROLLER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "waam/deposition_model.hpp"
#include "waam/velocity_profile.hpp"

namespace waam {

/// Height error of one layer, measured minus desired (mm).
struct LayerError {
    int layer_index = 0;
    Vector e;
};

inline double default_beta(double dv_t_max)
{
    if (!(dv_t_max > 0.0) || !std::isfinite(dv_t_max))
        throw DomainError("default_beta: dv_t_max must be positive (got " + std::to_string(dv_t_max) + ")");
    return 1.0 / (dv_t_max * dv_t_max);
}

struct SolverConfig {
    double dv_t_max = 2.0;
    /// Weight of the adjacent-speed penalty; 1 / dv_t_max^2 unless overridden.
    double beta = default_beta(2.0);
    /// Bound on the infinity norm of the projected gradient.
    double tolerance = 1e-8;
    int max_iterations = 200;

    static SolverConfig with_speed_jump(double dv_t_max)
    {
        SolverConfig c;
        c.dv_t_max = dv_t_max;
        c.beta = default_beta(dv_t_max);
        return c;
    }

    void validate() const
    {
        if (!(beta >= 0.0) || !std::isfinite(beta))
            throw ValidationError("solver: beta must be non-negative");
        if (!(dv_t_max > 0.0))
            throw ValidationError("solver: dv_t_max must be positive");
        if (!(tolerance > 0.0))
            throw ValidationError("solver: tolerance must be positive");
        if (max_iterations < 1)
            throw ValidationError("solver: max_iterations must be at least 1");
    }
};

inline LayerError layer_error(const Vector& measured, const Vector& desired, int layer_index = 0)
{
    if (measured.size() != desired.size())
        throw ShapeError("layer_error: measured has " + std::to_string(measured.size()) +
                         " segments, desired has " + std::to_string(desired.size()));
    return {layer_index, measured - desired};
}

/// Next-layer deposition target: nominal deposit minus the previous layer's error.
inline Vector corrected_target(const Vector& dh_nom, const LayerError& prev_error)
{
    if (dh_nom.size() != prev_error.e.size())
        throw ShapeError("corrected_target: dh_nom has " + std::to_string(dh_nom.size()) +
                         " segments, error has " + std::to_string(prev_error.e.size()));
    return dh_nom - prev_error.e;
}

/**
 * Objective of the per-layer inverse problem
 *
 *     F(v) = || dh_d - f(v) ||^2 + beta * || D v ||^2
 *
 * where f is the power-law model applied per segment and D the
 * (N-1) x N adjacent-difference operator.
 */
class SmoothedInverseProblem {
public:
    SmoothedInverseProblem(Vector target, ModelCoefficients model, double beta)
        : target_(std::move(target)), model_(std::move(model)), beta_(beta)
    {
    }

    Eigen::Index size() const { return target_.size(); }
    const Vector& target() const { return target_; }
    double beta() const { return beta_; }

    Vector residual(const Vector& v) const { return target_ - predict(model_, v); }

    static double smoothing(const Vector& v)
    {
        const Eigen::Index n = v.size();
        if (n < 2)
            return 0.0;
        return (v.head(n - 1) - v.tail(n - 1)).squaredNorm();
    }

    double objective(const Vector& v) const
    {
        return residual(v).squaredNorm() + beta_ * smoothing(v);
    }

    /**
     * F(trial) - F(v), evaluated from differences so that tiny steps near
     * the optimum are not lost to cancellation between two O(F) values.
     */
    double objective_change(const Vector& v, const Vector& trial) const
    {
        double change = 0.0;
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            const double f0 = predict(model_, v[k]);
            // f(trial) - f(v) = f(v) * expm1(a * log1p((trial - v) / v))
            const double df = f0 * std::expm1(model_.a * std::log1p((trial[k] - v[k]) / v[k]));
            const double r0 = target_[k] - f0;
            change += -df * (2.0 * r0 - df);
        }
        for (Eigen::Index k = 0; k + 1 < v.size(); ++k) {
            const double d0 = v[k] - v[k + 1];
            const double dd = (trial[k] - v[k]) - (trial[k + 1] - v[k + 1]);
            change += beta_ * dd * (2.0 * d0 + dd);
        }
        return change;
    }

    /// Dᵀ D v.
    static Vector difference_normal(const Vector& v)
    {
        const Eigen::Index n = v.size();
        Vector out = Vector::Zero(n);
        for (Eigen::Index k = 0; k + 1 < n; ++k) {
            const double d = v[k] - v[k + 1];
            out[k] += d;
            out[k + 1] -= d;
        }
        return out;
    }

    Vector jacobian_diagonal(const Vector& v) const
    {
        Vector j(v.size());
        for (Eigen::Index k = 0; k < v.size(); ++k)
            j[k] = predict_derivative(model_, v[k]);
        return j;
    }

    Vector gradient(const Vector& v) const
    {
        const Vector r = residual(v);
        const Vector j = jacobian_diagonal(v);
        return 2.0 * (-(j.array() * r.array()).matrix() + beta_ * difference_normal(v));
    }

private:
    Vector target_;
    ModelCoefficients model_;
    double beta_;
};

struct SolveDiagnostics {
    double initial_objective = 0.0;
    double objective = 0.0;
    double projected_gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    /// "converged", "iteration cap" or "stalled".
    std::string status;
    /// Per segment: -1 at v_t_min, +1 at v_t_max, 0 strictly inside.
    std::vector<std::int8_t> active_bounds;
    std::vector<double> objective_history;
};

struct SolveResult {
    VelocityProfile profile;
    SolveDiagnostics diagnostics;
};

namespace detail {

inline Vector project(const Vector& v, const ProcessBounds& b)
{
    return v.cwiseMax(b.v_t_min).cwiseMin(b.v_t_max);
}

inline double projected_gradient_norm(const Vector& v, const Vector& g, const ProcessBounds& b)
{
    if (v.size() == 0)
        return 0.0;
    return (v - project(v - g, b)).lpNorm<Eigen::Infinity>();
}

/// Solves (diag(j^2) + beta DᵀD) restricted to `free` against rhs[free].
inline std::optional<Vector> reduced_newton_step(const Vector& jac, double beta,
                                                 const std::vector<Eigen::Index>& free,
                                                 const Vector& rhs)
{
    const auto m = static_cast<Eigen::Index>(free.size());
    const Eigen::Index n = jac.size();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(3 * m));
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index k = free[static_cast<std::size_t>(i)];
        const double degree = (k > 0 ? 1.0 : 0.0) + (k + 1 < n ? 1.0 : 0.0);
        triplets.emplace_back(i, i, jac[k] * jac[k] + beta * degree);
        if (i + 1 < m && free[static_cast<std::size_t>(i + 1)] == k + 1) {
            triplets.emplace_back(i, i + 1, -beta);
            triplets.emplace_back(i + 1, i, -beta);
        }
    }
    Eigen::SparseMatrix<double> h(m, m);
    h.setFromTriplets(triplets.begin(), triplets.end());

    Vector b(m);
    for (Eigen::Index i = 0; i < m; ++i)
        b[i] = rhs[free[static_cast<std::size_t>(i)]];

    for (double damping : {0.0, 1e-12, 1e-8, 1e-4}) {
        Eigen::SparseMatrix<double> hd = h;
        if (damping > 0.0) {
            const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
            for (Eigen::Index i = 0; i < m; ++i)
                hd.coeffRef(i, i) += damping * scale;
        }
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(hd);
        if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
            continue;
        Vector x = ldlt.solve(b);
        if (ldlt.info() == Eigen::Success && x.allFinite())
            return x;
    }
    return std::nullopt;
}

} // namespace detail

/**
 * Box-constrained smoothed inverse of the process model for one layer.
 *
 * Projected Gauss-Newton (Bertsekas-style two-metric projection): variables
 * sitting on a bound with the gradient pushing outward are held, the rest
 * take a Gauss-Newton step on the tridiagonal normal matrix, and an Armijo
 * search along the projection arc keeps the objective non-increasing.
 */
inline SolveResult solve_velocity_profile(const Vector& dh_d, const ModelCoefficients& model,
                                          const ProcessBounds& bounds, const SolverConfig& cfg,
                                          const std::optional<VelocityProfile>& v_init = std::nullopt)
{
    const Eigen::Index n = dh_d.size();
    if (n == 0)
        throw ShapeError("solve_velocity_profile: empty target");
    if (!dh_d.allFinite())
        throw DomainError("solve_velocity_profile: non-finite target height");
    validate_model(model);
    bounds.validate();
    cfg.validate();

    Vector v;
    if (v_init) {
        if (v_init->v_t.size() != n)
            throw ShapeError("solve_velocity_profile: initial profile has wrong length");
        if (!v_init->v_t.allFinite())
            throw DomainError("solve_velocity_profile: non-finite initial profile");
        v = detail::project(v_init->v_t, bounds);
    } else {
        const Vector clamped = dh_d.cwiseMax(bounds.dh_min).cwiseMin(bounds.dh_max);
        v = detail::project(invert(model, clamped), bounds);
    }

    const SmoothedInverseProblem problem(dh_d, model, cfg.beta);
    SolveDiagnostics diag;
    double f = problem.objective(v);
    diag.initial_objective = f;
    diag.objective_history.push_back(f);
    diag.status = "iteration cap";

    constexpr double armijo = 1e-4;
    const double width = bounds.v_t_max - bounds.v_t_min;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        const Vector g = problem.gradient(v);
        const double pg = detail::projected_gradient_norm(v, g, bounds);
        diag.projected_gradient_norm = pg;
        if (pg <= cfg.tolerance) {
            // Round-off can leave a pinned speed an ulp inside its bound.
            for (Eigen::Index k = 0; k < n; ++k) {
                if (g[k] > 0.0 && v[k] - g[k] <= bounds.v_t_min && v[k] - bounds.v_t_min <= cfg.tolerance)
                    v[k] = bounds.v_t_min;
                else if (g[k] < 0.0 && v[k] - g[k] >= bounds.v_t_max && bounds.v_t_max - v[k] <= cfg.tolerance)
                    v[k] = bounds.v_t_max;
            }
            diag.converged = true;
            diag.status = "converged";
            break;
        }

        const double eps = std::min(1e-3 * width, pg);
        const Vector jac = problem.jacobian_diagonal(v);
        std::vector<Eigen::Index> free;
        Vector step = Vector::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const bool hold_low = v[k] <= bounds.v_t_min + eps && g[k] > 0.0;
            const bool hold_high = v[k] >= bounds.v_t_max - eps && g[k] < 0.0;
            if (hold_low || hold_high) {
                const double curvature = 2.0 * (jac[k] * jac[k] + 2.0 * cfg.beta);
                step[k] = -g[k] / std::max(curvature, std::numeric_limits<double>::min());
            } else {
                free.push_back(k);
            }
        }
        if (!free.empty()) {
            // Gauss-Newton normal matrix is 2 (JᵀJ + beta DᵀD); the factor 2 cancels.
            const auto sub = detail::reduced_newton_step(jac, cfg.beta, free, -0.5 * g);
            if (!sub)
                throw SolverError("solve_velocity_profile: singular Gauss-Newton system");
            for (std::size_t i = 0; i < free.size(); ++i)
                step[free[i]] = (*sub)[static_cast<Eigen::Index>(i)];
        }

        auto line_search = [&](const Vector& direction, Vector& v_out, double& f_out) {
            for (double alpha = 1.0; alpha > 1e-16; alpha *= 0.5) {
                const Vector trial = detail::project(v + alpha * direction, bounds);
                const double decrease = g.dot(trial - v);
                const double change = problem.objective_change(v, trial);
                if (change < 0.0 && change <= armijo * std::min(0.0, decrease)) {
                    v_out = trial;
                    f_out = f + change;
                    return true;
                }
            }
            return false;
        };

        Vector v_next;
        double f_next = f;
        bool moved = line_search(step, v_next, f_next);
        if (!moved)
            moved = line_search(-g / std::max(1.0, g.lpNorm<Eigen::Infinity>()), v_next, f_next);
        diag.iterations = it + 1;
        if (!moved || (v_next - v).lpNorm<Eigen::Infinity>() == 0.0) {
            diag.status = "stalled";
            break;
        }
        v = std::move(v_next);
        f = f_next;
        diag.objective_history.push_back(f);
    }

    if (!diag.converged && diag.status == "iteration cap") {
        diag.projected_gradient_norm =
            detail::projected_gradient_norm(v, problem.gradient(v), bounds);
        if (diag.projected_gradient_norm <= cfg.tolerance) {
            diag.converged = true;
            diag.status = "converged";
        }
    }

    v = detail::project(v, bounds);
    diag.objective = problem.objective(v);
    diag.active_bounds.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        diag.active_bounds[static_cast<std::size_t>(k)] =
            v[k] == bounds.v_t_min ? -1 : (v[k] == bounds.v_t_max ? 1 : 0);

    return {VelocityProfile{0, std::move(v)}, std::move(diag)};
}

} // namespace waam

#endif // WAAM_CORRECTION_CONTROLLER_HPP
