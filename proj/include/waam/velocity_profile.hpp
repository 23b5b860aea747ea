#ifndef WAAM_VELOCITY_PROFILE_HPP
#define WAAM_VELOCITY_PROFILE_HPP

#include <string>

#include "waam/deposition_model.hpp"

namespace waam {

/// Per-segment torch speeds (mm/s) for one layer.
struct VelocityProfile {
    int layer_index = 0;
    Vector v_t;
};

/// Throws PlanInfeasibleError unless every speed lies in [v_t_min, v_t_max].
inline void require_within_speed_bounds(const Vector& v_t, const ProcessBounds& bounds,
                                        const std::string& what)
{
    for (Eigen::Index k = 0; k < v_t.size(); ++k) {
        if (!(v_t[k] >= bounds.v_t_min && v_t[k] <= bounds.v_t_max))
            throw PlanInfeasibleError(what + ": segment " + std::to_string(k) + " speed " +
                                      std::to_string(v_t[k]) + " mm/s outside [" +
                                      std::to_string(bounds.v_t_min) + ", " +
                                      std::to_string(bounds.v_t_max) + "]");
    }
}

} // namespace waam

#endif // WAAM_VELOCITY_PROFILE_HPP
