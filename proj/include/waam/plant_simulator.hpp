#ifndef WAAM_PLANT_SIMULATOR_HPP
#define WAAM_PLANT_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "waam/deposition_model.hpp"
#include "waam/velocity_profile.hpp"

namespace waam {

/**
 * First-order thermal lag in layer units. lambda is a normalised part
 * temperature: 0 reproduces the cold model, 1 the hot model.
 */
struct ThermalConfig {
    double tau_layers = 10.0;
    double lambda_init = 0.0;
    /// Fraction of lambda lost before each weld.
    double interlayer_cooling = 0.0;

    void validate() const
    {
        if (!(tau_layers > 0.0))
            throw ValidationError("thermal: tau_layers must be positive");
        if (!(lambda_init >= 0.0 && lambda_init <= 1.0))
            throw ValidationError("thermal: lambda_init must lie in [0, 1]");
        if (!(interlayer_cooling >= 0.0 && interlayer_cooling < 1.0))
            throw ValidationError("thermal: interlayer_cooling must lie in [0, 1)");
    }
};

struct PlantState {
    double lambda = 0.0;
    Vector h_true;
    int layer_count = 0;

    static PlantState initial(Eigen::Index n_segments, const ThermalConfig& cfg)
    {
        cfg.validate();
        return {cfg.lambda_init, Vector::Zero(n_segments), 0};
    }
};

struct SensorConfig {
    double noise_sigma = 0.1;  // mm
    std::uint64_t seed = 1;

    void validate() const
    {
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
            throw ValidationError("sensor: noise_sigma must be non-negative");
    }
};

inline ModelCoefficients effective_coefficients(double lambda, const ModelCoefficients& cold,
                                                const ModelCoefficients& hot)
{
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw DomainError("effective_coefficients: lambda must lie in [0, 1] (got " +
                          std::to_string(lambda) + ")");
    return {(1.0 - lambda) * cold.a + lambda * hot.a, (1.0 - lambda) * cold.b + lambda * hot.b,
            "plant"};
}

/// Temperature after one more layer: interlayer cooling, then heating toward 1.
inline double thermal_step(const PlantState& state, const ThermalConfig& cfg)
{
    double lambda = state.lambda * (1.0 - cfg.interlayer_cooling);
    lambda += (1.0 - lambda) * (1.0 - std::exp(-1.0 / cfg.tau_layers));
    return std::clamp(lambda, 0.0, 1.0);
}

struct DepositResult {
    PlantState state;
    /// True bead heights laid down by this layer.
    Vector dh;
    /// Temperature the layer was welded at.
    double lambda_at_weld = 0.0;
};

/**
 * Welds one layer. The whole layer uses the temperature at its start;
 * speeds outside the process bounds are rejected.
 */
inline DepositResult deposit_layer(PlantState state, const Vector& v_t, const ModelCoefficients& cold,
                                   const ModelCoefficients& hot, const ThermalConfig& cfg,
                                   const ProcessBounds& bounds)
{
    if (v_t.size() != state.h_true.size())
        throw ShapeError("deposit_layer: profile has " + std::to_string(v_t.size()) +
                         " segments, plant has " + std::to_string(state.h_true.size()));
    require_within_speed_bounds(v_t, bounds, "deposit_layer");
    const ModelCoefficients now = effective_coefficients(state.lambda, cold, hot);
    DepositResult out;
    out.lambda_at_weld = state.lambda;
    out.dh = predict(now, v_t);
    state.h_true += out.dh;
    state.lambda = thermal_step(state, cfg);
    ++state.layer_count;
    out.state = std::move(state);
    return out;
}

/// Height sensor adding seeded Gaussian noise to the true profile.
class HeightSensor {
public:
    explicit HeightSensor(const SensorConfig& cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

    Vector measure(const PlantState& state)
    {
        if (cfg_.noise_sigma == 0.0)
            return state.h_true;
        std::normal_distribution<double> noise(0.0, cfg_.noise_sigma);
        Vector h = state.h_true;
        for (Eigen::Index k = 0; k < h.size(); ++k)
            h[k] += noise(rng_);
        return h;
    }

    const SensorConfig& config() const { return cfg_; }

private:
    SensorConfig cfg_;
    std::mt19937_64 rng_;
};

/// Stateful wrapper owning the plant state for one simulated build.
class DepositionPlant {
public:
    DepositionPlant(Eigen::Index n_segments, ModelCoefficients cold, ModelCoefficients hot,
                    ThermalConfig thermal, ProcessBounds bounds)
        : cold_(std::move(cold)), hot_(std::move(hot)), thermal_(thermal), bounds_(bounds),
          state_(PlantState::initial(n_segments, thermal))
    {
    }

    DepositResult deposit(const Vector& v_t)
    {
        DepositResult r = deposit_layer(state_, v_t, cold_, hot_, thermal_, bounds_);
        state_ = r.state;
        return r;
    }

    const PlantState& state() const { return state_; }

private:
    ModelCoefficients cold_;
    ModelCoefficients hot_;
    ThermalConfig thermal_;
    ProcessBounds bounds_;
    PlantState state_;
};

} // namespace waam

#endif // WAAM_PLANT_SIMULATOR_HPP
