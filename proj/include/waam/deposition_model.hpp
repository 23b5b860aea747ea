#ifndef WAAM_DEPOSITION_MODEL_HPP
#define WAAM_DEPOSITION_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "waam/error.hpp"

namespace waam {

using Vector = Eigen::VectorXd;

/**
 * Coefficients of the power-law bead model
 *
 *     dh = exp(b) * v_t^a      <=>      ln(dh) = a ln(v_t) + b
 *
 * with heights in mm and torch speeds in mm/s. A usable process model has
 * a < 0 (slower torch, taller bead); see validate_model().
 */
struct ModelCoefficients {
    double a = 0.0;
    double b = 0.0;
    std::string label;

    friend bool operator==(const ModelCoefficients&, const ModelCoefficients&) = default;
};

/// Model fitted with the part cooled to ambient between beads.
inline ModelCoefficients cold_model() { return {-0.4619, 1.647, "cold"}; }

/// Model fitted on a part welded without interlayer delay (thermal steady state).
inline ModelCoefficients hot_model() { return {-0.3700, 1.215, "hot"}; }

inline void validate_model(const ModelCoefficients& m)
{
    if (!std::isfinite(m.a) || !std::isfinite(m.b))
        throw ValidationError("model '" + m.label + "': non-finite coefficients");
    if (!(m.a < 0.0))
        throw ValidationError("model '" + m.label + "': exponent a must be negative (got " +
                              std::to_string(m.a) + ")");
}

/// Bead height for torch speed `v_t`.
inline double predict(const ModelCoefficients& m, double v_t)
{
    if (!(v_t > 0.0))
        throw DomainError("predict: torch speed must be positive (got " + std::to_string(v_t) + ")");
    return std::exp(m.b + m.a * std::log(v_t));
}

/// Torch speed producing bead height `dh`.
inline double invert(const ModelCoefficients& m, double dh)
{
    if (!(dh > 0.0))
        throw DomainError("invert: height must be positive (got " + std::to_string(dh) + ")");
    if (m.a == 0.0)
        throw NonInvertibleError("invert: model with a = 0 is constant in v_t");
    return std::exp((std::log(dh) - m.b) / m.a);
}

/// d(predict)/d(v_t) = a * predict(v_t) / v_t.
inline double predict_derivative(const ModelCoefficients& m, double v_t)
{
    return m.a * predict(m, v_t) / v_t;
}

inline Vector predict(const ModelCoefficients& m, const Vector& v_t)
{
    Vector out(v_t.size());
    for (Eigen::Index k = 0; k < v_t.size(); ++k)
        out[k] = predict(m, v_t[k]);
    return out;
}

inline Vector invert(const ModelCoefficients& m, const Vector& dh)
{
    Vector out(dh.size());
    for (Eigen::Index k = 0; k < dh.size(); ++k)
        out[k] = invert(m, dh[k]);
    return out;
}

/**
 * Torch-speed bounds and the matching bead-height envelope.
 *
 * Heights are stored explicitly. Because the model is decreasing, the slow
 * speed bound produces the tallest bead: dh_max corresponds to v_t_min.
 */
struct ProcessBounds {
    double v_t_min = 3.0;
    double v_t_max = 17.0;
    double dh_min = 0.0;
    double dh_max = 0.0;

    void validate() const
    {
        if (!(v_t_min > 0.0 && v_t_min < v_t_max) || !std::isfinite(v_t_max))
            throw ValidationError("bounds: require 0 < v_t_min < v_t_max");
        if (!(dh_min > 0.0 && dh_min < dh_max) || !std::isfinite(dh_max))
            throw ValidationError("bounds: require 0 < dh_min < dh_max");
    }

    /// Height envelope generated by one model over [v_t_min, v_t_max].
    static ProcessBounds from_model(const ModelCoefficients& m, double v_t_min, double v_t_max)
    {
        validate_model(m);
        ProcessBounds pb{v_t_min, v_t_max, 0.0, 0.0};
        if (!(v_t_min > 0.0 && v_t_min < v_t_max))
            throw ValidationError("bounds: require 0 < v_t_min < v_t_max");
        pb.dh_min = predict(m, v_t_max);
        pb.dh_max = predict(m, v_t_min);
        pb.validate();
        return pb;
    }

    /// Heights achievable inside the speed bounds by every model in `models`.
    static ProcessBounds common_envelope(std::span<const ModelCoefficients> models, double v_t_min,
                                         double v_t_max)
    {
        if (models.empty())
            throw ValidationError("bounds: common envelope needs at least one model");
        ProcessBounds pb = from_model(models.front(), v_t_min, v_t_max);
        for (const auto& m : models.subspan(1)) {
            const ProcessBounds other = from_model(m, v_t_min, v_t_max);
            pb.dh_min = std::max(pb.dh_min, other.dh_min);
            pb.dh_max = std::min(pb.dh_max, other.dh_max);
        }
        if (!(pb.dh_min < pb.dh_max))
            throw GeometryInfeasibleError("bounds: models share no common height envelope");
        return pb;
    }

    /// True when every height in [dh_min, dh_max] is reachable by `m` inside the speed bounds.
    bool achievable_by(const ModelCoefficients& m, double rel_tol = 1e-12) const
    {
        return predict(m, v_t_max) <= dh_min * (1.0 + rel_tol) &&
               predict(m, v_t_min) >= dh_max * (1.0 - rel_tol);
    }
};

struct CalibrationSample {
    double v_t = 0.0;
    double dh = 0.0;
};

struct CalibrationResult {
    ModelCoefficients coeffs;
    double r_squared = 0.0;
    /// Euclidean norm of the log-space residual.
    double residual_norm = 0.0;
    std::size_t sample_count = 0;
};

/**
 * Ordinary least squares of ln(dh) on ln(v_t).
 *
 * Every sample must be strictly positive; offending samples are reported,
 * never dropped. At least two distinct speeds are required.
 */
inline CalibrationResult calibrate(std::span<const CalibrationSample> samples, std::string label = {})
{
    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd design(n, 2);
    Vector log_dh(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        if (!(s.v_t > 0.0) || !(s.dh > 0.0) || !std::isfinite(s.v_t) || !std::isfinite(s.dh))
            throw DomainError("calibrate: sample " + std::to_string(i + 1) +
                              " is not strictly positive (v_t=" + std::to_string(s.v_t) +
                              ", dh=" + std::to_string(s.dh) + ")");
        design(i, 0) = std::log(s.v_t);
        design(i, 1) = 1.0;
        log_dh[i] = std::log(s.dh);
    }

    bool distinct = false;
    for (Eigen::Index i = 1; i < n && !distinct; ++i)
        distinct = design(i, 0) != design(0, 0);
    if (!distinct)
        throw RankDeficientError("calibrate: need samples at two or more distinct torch speeds (got " +
                                 std::to_string(n) + " sample(s))");

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 2)
        throw RankDeficientError("calibrate: design matrix is rank deficient");
    const Eigen::Vector2d coef = qr.solve(log_dh);

    const Vector residual = log_dh - design * coef;
    const double ss_res = residual.squaredNorm();
    const double ss_tot = (log_dh.array() - log_dh.mean()).square().sum();

    CalibrationResult out;
    out.coeffs = {coef[0], coef[1], std::move(label)};
    out.residual_norm = std::sqrt(ss_res);
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    out.sample_count = samples.size();
    return out;
}

} // namespace waam

#endif // WAAM_DEPOSITION_MODEL_HPP
