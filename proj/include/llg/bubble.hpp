#pragma once

// Fitting the quasi-stationary profile theta ~ 2 arctan(r / R) at the origin.

#include "mesh.hpp"

#include <boost/math/tools/minima.hpp>

namespace llg {

struct BubbleFit {
    double R = 0.0;         ///< inner length scale
    double C = 0.0;         ///< bubble azimuth (radians, principal value)
    double residual = 0.0;  ///< sup |theta - 2 arctan(r/R)| / sup 2 arctan(r/R) over the window
};

struct BubbleFitConfig {
    double window = 10.0;    ///< fit on r in [0, window * R]
    double min_grad = 10.0;  ///< no core to fit below this gradient
    double max_residual = 0.2;
};

namespace detail {

/// Least-squares fit of theta (measured from the pole at r = 0) to
/// 2 arctan(r / R). The window [0, window * R] follows the current estimate.
inline BubbleFit fit_profile(std::span<const double> theta, const RadialMesh& mesh, double R0,
                             const BubbleFitConfig& cfg)
{
    double R = R0;
    std::size_t last = 0;
    for (int pass = 0; pass < 4; ++pass) {
        const double rmax = cfg.window * R;
        last = 0;
        while (last + 1 < mesh.size() && mesh[last + 1] <= rmax) ++last;
        if (last < 3) throw FitError("fit_bubble: fewer than 4 nodes inside the fit window");
        auto sse = [&](double logR) {
            const double Rt = std::exp(logR);
            double s = 0.0;
            for (std::size_t i = 0; i <= last; ++i) {
                const double d = theta[i] - 2.0 * std::atan(mesh[i] / Rt);
                s += d * d;
            }
            return s;
        };
        const auto res = boost::math::tools::brent_find_minima(sse, std::log(R) - std::log(8.0),
                                                               std::log(R) + std::log(8.0), 40);
        R = std::exp(res.first);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i <= last; ++i) {
        const double model = 2.0 * std::atan(mesh[i] / R);
        num = std::max(num, std::abs(theta[i] - model));
        den = std::max(den, std::abs(model));
    }
    BubbleFit fit;
    fit.R = R;
    fit.residual = den > 0.0 ? num / den : 0.0;
    return fit;
}

inline std::size_t window_end(const RadialMesh& mesh, double rmax)
{
    std::size_t last = 0;
    while (last + 1 < mesh.size() && mesh[last + 1] <= rmax) ++last;
    return last;
}

} // namespace detail

/// Azimuth of the bubble at the origin: direction of (u_r, v_r) at r = 0.
inline double origin_azimuth(const MagnetizationField& f, const RadialMesh& mesh)
{
    const SpatialOperators ops(mesh);
    return std::atan2(ops.ddr(f.flat(), 0, 3, 1), ops.ddr(f.flat(), 0, 3, 0));
}

namespace detail {

/// Fit on a continuous (theta, phi) representation. theta is measured from
/// its value at the origin; a profile that leaves the pole downwards is the
/// same as one leaving upwards with phi + pi.
inline BubbleFit fit_euler(const EulerField& f, const RadialMesh& mesh, double gmax, const BubbleFitConfig& cfg)
{
    if (!(gmax >= cfg.min_grad)) throw PreconditionError("fit_bubble: gradient below core threshold");
    std::vector<double> theta(f.size());
    const double sgn = (f.theta.size() > 1 && f.theta[1] < f.theta[0]) ? -1.0 : 1.0;
    for (std::size_t i = 0; i < f.size(); ++i) theta[i] = sgn * (f.theta[i] - f.theta[0]);
    BubbleFit fit = fit_profile(theta, mesh, 2.0 / gmax, cfg);
    const std::size_t last = window_end(mesh, cfg.window * fit.R);
    double sc = 0.0, ss = 0.0;
    for (std::size_t i = 1; i <= last; ++i) {
        sc += std::cos(f.phi[i]);
        ss += std::sin(f.phi[i]);
    }
    fit.C = wrap_angle(std::atan2(ss, sc) + (sgn < 0.0 ? pi : 0.0));
    if (fit.residual > cfg.max_residual) throw FitError("fit_bubble: residual above threshold");
    return fit;
}

} // namespace detail

/// Fits the unwrapped polar angle, so profiles that pass the opposite pole
/// inside the window are handled; C is the circular mean of phi over the
/// window.
inline BubbleFit fit_bubble(const MagnetizationField& f, const RadialMesh& mesh, const BubbleFitConfig& cfg = {})
{
    const auto g = gradient_density(f, mesh);
    return detail::fit_euler(unwrap_euler(f), mesh, *std::max_element(g.begin(), g.end()), cfg);
}

/// Scalar radial variant; the azimuth is the (constant) phi of the field.
inline BubbleFit fit_bubble(const EulerField& f, const RadialMesh& mesh, const BubbleFitConfig& cfg = {})
{
    const auto g = gradient_density(f.theta, mesh);
    return detail::fit_euler(f, mesh, *std::max_element(g.begin(), g.end()), cfg);
}

/// Azimuth of the remote solution: direction of (u_r, v_r) at r = 1.
inline double boundary_azimuth(const MagnetizationField& f, const RadialMesh& mesh)
{
    const SpatialOperators ops(mesh);
    const std::size_t n = mesh.size() - 1;
    return std::atan2(ops.ddr(f.flat(), n, 3, 1), ops.ddr(f.flat(), n, 3, 0));
}

} // namespace llg
