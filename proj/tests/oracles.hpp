#ifndef WAAM_TESTS_ORACLES_HPP
#define WAAM_TESTS_ORACLES_HPP

// Independent reference computations used only by the tests. None of these
// call into the code paths they are used to check.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace oracle {

/// Closed-form simple linear regression y = slope * x + intercept.
inline std::pair<double, double> ols_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

/// exp(b) * v^a written out directly.
inline double power_law(double a, double b, double v) { return std::exp(b) * std::pow(v, a); }

/// Smoothed inverse objective written out term by term.
inline double objective(const std::vector<double>& target, double a, double b, double beta,
                        const std::vector<double>& v)
{
    double f = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double r = target[k] - power_law(a, b, v[k]);
        f += r * r;
    }
    for (std::size_t k = 0; k + 1 < v.size(); ++k)
        f += beta * (v[k] - v[k + 1]) * (v[k] - v[k + 1]);
    return f;
}

struct GridMinimum {
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> argmin;
};

/// Exhaustive search over a `per_axis`^3 grid spanning [lo, hi]^3.
inline GridMinimum grid_search_3(const std::vector<double>& target, double a, double b, double beta,
                                 double lo, double hi, int per_axis)
{
    std::vector<double> axis(static_cast<std::size_t>(per_axis));
    for (int i = 0; i < per_axis; ++i)
        axis[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (per_axis - 1);
    std::vector<double> f_axis(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i)
        f_axis[i] = power_law(a, b, axis[i]);

    GridMinimum best;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        const double r0 = target[0] - f_axis[i];
        for (std::size_t j = 0; j < axis.size(); ++j) {
            const double r1 = target[1] - f_axis[j];
            const double d01 = axis[i] - axis[j];
            const double partial = r0 * r0 + r1 * r1 + beta * d01 * d01;
            if (partial >= best.value)
                continue;
            for (std::size_t k = 0; k < axis.size(); ++k) {
                const double r2 = target[2] - f_axis[k];
                const double d12 = axis[j] - axis[k];
                const double f = partial + r2 * r2 + beta * d12 * d12;
                if (f < best.value) {
                    best.value = f;
                    best.argmin = {axis[i], axis[j], axis[k]};
                }
            }
        }
    }
    return best;
}

/// Central finite-difference gradient.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h)
{
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double x0 = x[k];
        x[k] = x0 + h;
        const double fp = f(x);
        x[k] = x0 - h;
        const double fm = f(x);
        x[k] = x0;
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

} // namespace oracle

#endif // WAAM_TESTS_ORACLES_HPP
