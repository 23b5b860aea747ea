#ifndef WAAM_LAYER_PLANNER_HPP
#define WAAM_LAYER_PLANNER_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "waam/deposition_model.hpp"
#include "waam/velocity_profile.hpp"

namespace waam {

/// Bent tube: a straight base of `base_height` followed by a bend of
/// `final_angle` radians about an axis `bend_radius` from the tube centre.
struct PartSpec {
    double tube_diameter = 50.0;  // mm
    double bend_radius = 224.0;   // mm
    double final_angle = std::numbers::pi / 4.0;
    double base_height = 5.0;     // mm

    void validate() const
    {
        if (!(tube_diameter > 0.0) || !std::isfinite(tube_diameter))
            throw ValidationError("part: tube_diameter must be positive");
        if (!(bend_radius > tube_diameter / 2.0) || !std::isfinite(bend_radius))
            throw ValidationError("part: bend_radius must exceed tube_diameter / 2");
        if (!(final_angle > 0.0 && final_angle <= std::numbers::pi / 2.0))
            throw ValidationError("part: final_angle must lie in (0, pi/2]");
        if (!(base_height >= 0.0) || !std::isfinite(base_height))
            throw ValidationError("part: base_height must be non-negative");
    }
};

/**
 * Slicing geometry in the initial (untilted) slicing plane.
 *
 * Positions are measured along the part from its inner edge; the rotation
 * centre sits at `p_rot` < 0 on the same axis, so r = position - p_rot.
 */
struct SliceGeometry {
    double p_rot = 0.0;
    double length = 0.0;
    /// Angle increment per tilted layer; zero until chosen.
    double theta_step = 0.0;
    Vector segment_positions;
    Vector r_of_segment;

    double r_min() const { return r_of_segment.minCoeff(); }
    double r_max() const { return r_of_segment.maxCoeff(); }
    Eigen::Index segment_count() const { return r_of_segment.size(); }
};

struct LayerPlan {
    int layer_index = 0;
    /// True for layers of the bend; false for the uniform base layers.
    bool tilted = false;
    /// Tilt added by this layer, radians (zero for base layers).
    double tilt_increment = 0.0;
    Vector segment_positions;
    Vector h_d;
    Vector dh_nom;
};

inline SliceGeometry compute_slice_geometry(const PartSpec& part, Eigen::Index n_segments)
{
    part.validate();
    if (n_segments < 2)
        throw ValidationError("slice geometry: need at least 2 segments (got " +
                              std::to_string(n_segments) + ")");
    SliceGeometry g;
    g.length = part.tube_diameter;
    g.p_rot = -(part.bend_radius - part.tube_diameter / 2.0);
    g.segment_positions = Vector::LinSpaced(n_segments, 0.0, g.length);
    g.r_of_segment = g.segment_positions.array() - g.p_rot;
    return g;
}

/**
 * Largest per-layer tilt such that the outermost segment deposits exactly
 * dh_max. Throws GeometryInfeasibleError when the innermost segment would
 * then fall below dh_min, since no smaller angle can fix that.
 */
inline double max_angle_increment(const SliceGeometry& geom, const ProcessBounds& bounds)
{
    bounds.validate();
    if (geom.segment_count() == 0)
        throw ShapeError("max_angle_increment: geometry has no segments");
    const double r_max = geom.r_max();
    const double r_min = geom.r_min();
    if (!(r_min > 0.0))
        throw ValidationError("max_angle_increment: radial distances must be positive");
    const double theta = bounds.dh_max / r_max;
    if (r_min * theta < bounds.dh_min)
        throw GeometryInfeasibleError(
            "part outside process envelope: height ratio dh_min/dh_max = " +
            std::to_string(bounds.dh_min / bounds.dh_max) + " exceeds radial ratio r_min/r_max = " +
            std::to_string(r_min / r_max));
    return theta;
}

/// Checks a chosen tilt increment against the height envelope.
inline void check_angle_increment(const SliceGeometry& geom, const ProcessBounds& bounds,
                                  double theta)
{
    constexpr double slack = 1e-12;
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw ValidationError("angle increment must be positive");
    if (geom.r_max() * theta > bounds.dh_max * (1.0 + slack))
        throw GeometryInfeasibleError("angle increment " + std::to_string(theta) +
                                      " rad needs " + std::to_string(geom.r_max() * theta) +
                                      " mm at the outer edge, above dh_max");
    if (geom.r_min() * theta < bounds.dh_min * (1.0 - slack))
        throw GeometryInfeasibleError("angle increment " + std::to_string(theta) +
                                      " rad gives " + std::to_string(geom.r_min() * theta) +
                                      " mm at the inner edge, below dh_min");
}

/// Number of tilted layers needed to reach `final_angle` with steps of at most `theta`.
inline int tilted_layer_count(double final_angle, double theta)
{
    const double ratio = final_angle / theta;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio))
        return static_cast<int>(nearest);
    return static_cast<int>(std::ceil(ratio));
}

/**
 * Layer plans for the whole part.
 *
 * Base layers share one uniform height (the fewest layers that stay inside
 * the envelope). Tilted layers deposit r_k * phi with phi = final_angle / n
 * and n = ceil(final_angle / theta_step), so the bend ends exactly at
 * final_angle.
 */
inline std::vector<LayerPlan> generate_layer_plans(const PartSpec& part, const SliceGeometry& geom,
                                                   const ModelCoefficients& model,
                                                   const ProcessBounds& bounds)
{
    part.validate();
    bounds.validate();
    validate_model(model);
    if (!bounds.achievable_by(model))
        throw PlanInfeasibleError("height envelope [" + std::to_string(bounds.dh_min) + ", " +
                                  std::to_string(bounds.dh_max) + "] mm is not reachable by model '" +
                                  model.label + "' inside the speed bounds");
    check_angle_increment(geom, bounds, geom.theta_step);

    const Eigen::Index n = geom.segment_count();
    std::vector<LayerPlan> plans;
    Vector h_d = Vector::Zero(n);

    auto push = [&](const Vector& dh, bool tilted, double tilt) {
        LayerPlan p;
        p.layer_index = static_cast<int>(plans.size()) + 1;
        p.tilted = tilted;
        p.tilt_increment = tilt;
        p.segment_positions = geom.segment_positions;
        p.dh_nom = dh;
        h_d += dh;
        p.h_d = h_d;
        plans.push_back(std::move(p));
    };

    if (part.base_height > 0.0) {
        const int n_base = static_cast<int>(std::ceil(part.base_height / bounds.dh_max - 1e-12));
        const double dh_base = part.base_height / n_base;
        if (dh_base < bounds.dh_min)
            throw GeometryInfeasibleError("base height " + std::to_string(part.base_height) +
                                          " mm cannot be split into layers inside the envelope");
        for (int i = 0; i < n_base; ++i)
            push(Vector::Constant(n, dh_base), false, 0.0);
    }

    const int n_tilted = tilted_layer_count(part.final_angle, geom.theta_step);
    const double phi = part.final_angle / n_tilted;
    check_angle_increment(geom, bounds, phi);
    const Vector dh_tilted = geom.r_of_segment * phi;
    for (int i = 0; i < n_tilted; ++i)
        push(dh_tilted, true, phi);
    return plans;
}

/// Open-loop speeds: element-wise model inverse of each layer's nominal deposit.
inline std::vector<VelocityProfile> nominal_velocity_plan(const std::vector<LayerPlan>& plans,
                                                          const ModelCoefficients& model,
                                                          const ProcessBounds& bounds)
{
    validate_model(model);
    bounds.validate();
    constexpr double snap = 1e-9;
    std::vector<VelocityProfile> out;
    out.reserve(plans.size());
    for (const auto& plan : plans) {
        Vector v = invert(model, plan.dh_nom);
        // Round-off at the envelope edges lands a few ulps outside the box.
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            if (v[k] < bounds.v_t_min && v[k] >= bounds.v_t_min * (1.0 - snap))
                v[k] = bounds.v_t_min;
            if (v[k] > bounds.v_t_max && v[k] <= bounds.v_t_max * (1.0 + snap))
                v[k] = bounds.v_t_max;
        }
        require_within_speed_bounds(v, bounds,
                                    "nominal plan layer " + std::to_string(plan.layer_index));
        out.push_back({plan.layer_index, std::move(v)});
    }
    return out;
}

} // namespace waam

#endif // WAAM_LAYER_PLANNER_HPP
