#pragma once

// Reduced ODE systems from the matched asymptotics of blowup, their closed
// forms, and the quadratures behind the n >= 2 analysis.

#include "mesh.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/numeric/odeint.hpp>

#include <complex>
#include <functional>
#include <optional>

namespace llg {

using cplx = std::complex<double>;

struct ReducedState {
    double tau = 0.0;
    double sigma_r = 0.0, sigma_i = 0.0;
    double p = 0.0;
    double C_tilde = 0.0;
};

struct SeparatrixState {
    double C_tilde = 0.0;
    double R = 0.0;
    double q0 = 0.0;
    double eps = 0.0;
    double t_fast = 0.0;
};

struct OdeTolerance {
    double rel = 1e-10;
    double abs = 1e-14;
};

// ---------------------------------------------------------------------------
// Amplitude equation (sigma'' - sigma') tau = sigma
// ---------------------------------------------------------------------------

struct SigmaPoint {
    double tau = 0.0;
    cplx sigma, dsigma;
};

/// sigma'' from the ODE.
inline cplx sigma_accel(double tau, cplx s, cplx ds) { return ds + s / tau; }

/// Relative residual of (s'' - s') tau - s for given derivatives.
inline double sigma_residual(double tau, cplx s, cplx ds, cplx dds)
{
    const cplx r = (dds - ds) * tau - s;
    const double scale = std::max({std::abs(s), std::abs(ds) * tau, std::abs(dds) * tau, 1e-300});
    return std::abs(r) / scale;
}

/// The growing solution tau e^tau and its derivatives.
inline std::array<double, 3> sigma_growing(double tau)
{
    const double e = std::exp(tau);
    return {tau * e, (tau + 1.0) * e, (tau + 2.0) * e};
}

/// The decaying solution 1 - tau e^tau E1(tau) ~ 1/tau, with its first
/// derivative. Valid for 0 < tau <= 700.
inline std::array<double, 2> sigma_decaying(double tau)
{
    if (!(tau > 0.0 && tau <= 700.0)) throw PreconditionError("sigma_decaying: tau must lie in (0, 700]");
    const double f = std::exp(tau) * boost::math::expint(1, tau);
    return {1.0 - tau * f, 1.0 - f - tau * f};
}

/// Integrates the amplitude equation from tau0 to tau_end and returns the
/// solution on n_out equally spaced points (both ends included).
inline std::vector<SigmaPoint> sigma_ode(double tau0, cplx sigma0, cplx dsigma0, double tau_end, std::size_t n_out = 201,
                                         const OdeTolerance& tol = {})
{
    namespace ode = boost::numeric::odeint;
    if (!(tau0 > 0.0)) throw PreconditionError("sigma_ode: tau0 must be positive");
    if (!(tau_end > tau0)) throw PreconditionError("sigma_ode: tau_end must exceed tau0");
    if (n_out < 2) throw PreconditionError("sigma_ode: need at least two output points");
    using St = std::array<double, 4>;
    St y{sigma0.real(), sigma0.imag(), dsigma0.real(), dsigma0.imag()};
    auto rhs = [](const St& x, St& dx, double tau) {
        dx[0] = x[2];
        dx[1] = x[3];
        dx[2] = x[2] + x[0] / tau;
        dx[3] = x[3] + x[1] / tau;
    };
    std::vector<double> times(n_out);
    for (std::size_t k = 0; k < n_out; ++k)
        times[k] = tau0 + (tau_end - tau0) * static_cast<double>(k) / static_cast<double>(n_out - 1);
    times.back() = tau_end;
    std::vector<SigmaPoint> out;
    out.reserve(n_out);
    auto obs = [&](const St& x, double tau) { out.push_back({tau, {x[0], x[1]}, {x[2], x[3]}}); };
    ode::integrate_times(ode::make_dense_output(tol.abs, tol.rel, ode::runge_kutta_dopri5<St>()), rhs, y,
                         times.begin(), times.end(), (tau_end - tau0) * 1e-3, obs);
    return out;
}

// ---------------------------------------------------------------------------
// Matched system: p, C~ and the two consistency residuals
// ---------------------------------------------------------------------------

struct ReducedPoint {
    ReducedState state;
    double residual_p = 0.0;  ///< (tau/4) p (p' - p) - (s_r s_r' + s_i s_i')
    double residual_C = 0.0;  ///< (tau/4) p^2 C~' - (s_i s_r' - s_r s_i')
};

inline ReducedPoint reduced_point(const SigmaPoint& sp)
{
    const cplx ds = sp.dsigma;
    const double m = std::abs(ds);
    if (!(m > 0.0)) throw Error("reduced_system: sigma' vanishes, C~ undefined");
    const cplx dds = sigma_accel(sp.tau, sp.sigma, ds);
    ReducedPoint rp;
    rp.state.tau = sp.tau;
    rp.state.sigma_r = sp.sigma.real();
    rp.state.sigma_i = sp.sigma.imag();
    rp.state.p = 2.0 * m;
    rp.state.C_tilde = std::atan2(ds.imag(), ds.real());
    const double dp = 2.0 * (ds.real() * dds.real() + ds.imag() * dds.imag()) / m;
    const double dC = (ds.real() * dds.imag() - ds.imag() * dds.real()) / (m * m);
    const double p = rp.state.p, tau = sp.tau;
    rp.residual_p = 0.25 * tau * p * (dp - p) - (sp.sigma.real() * ds.real() + sp.sigma.imag() * ds.imag());
    rp.residual_C = 0.25 * tau * p * p * dC - (sp.sigma.imag() * ds.real() - sp.sigma.real() * ds.imag());
    return rp;
}

inline std::vector<ReducedPoint> reduced_system(const std::vector<SigmaPoint>& traj)
{
    std::vector<ReducedPoint> out;
    out.reserve(traj.size());
    for (const auto& sp : traj) out.push_back(reduced_point(sp));
    return out;
}

// ---------------------------------------------------------------------------
// Quick rotation near blowup: dC~/dt~ = sin C~
// ---------------------------------------------------------------------------

/// Closed form through C0 at t~ = 0: for C0 in (0, pi) it is
/// pi/2 + arctan(sinh(t + c0)) with sinh c0 = -cot C0, mirrored for
/// negative C0; multiples of pi are equilibria.
inline double separatrix_closed_form(double C0, double t)
{
    const double k = std::round(C0 / (2.0 * pi));
    const double c = C0 - 2.0 * pi * k;  // in [-pi, pi]
    if (std::abs(std::sin(c)) == 0.0 || std::abs(c) == pi) return C0;
    const double s = c > 0.0 ? 1.0 : -1.0;
    const double c0 = std::asinh(-1.0 / std::tan(std::abs(c)));
    return 2.0 * pi * k + s * (0.5 * pi + std::atan(std::sinh(t + c0)));
}

struct SeparatrixPoint {
    double t = 0.0;
    double numeric = 0.0;
    double closed = 0.0;
};

inline std::vector<SeparatrixPoint> separatrix_ode(double C0, double t0, double t1, std::size_t n_out = 401,
                                                   const OdeTolerance& tol = {})
{
    namespace ode = boost::numeric::odeint;
    if (!(t1 > t0)) throw PreconditionError("separatrix_ode: empty time range");
    if (n_out < 2) throw PreconditionError("separatrix_ode: need at least two output points");
    using St = std::array<double, 1>;
    auto rhs = [](const St& x, St& dx, double) { dx[0] = std::sin(x[0]); };
    // Integrate forwards and backwards from t = 0, where C0 is given.
    std::vector<double> times(n_out);
    for (std::size_t k = 0; k < n_out; ++k)
        times[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n_out - 1);
    times.back() = t1;
    std::vector<SeparatrixPoint> out(n_out);
    auto run = [&](auto first, auto last, double dt) {
        std::vector<double> ts{0.0};
        ts.insert(ts.end(), first, last);
        St y{C0};
        std::size_t j = 0;
        ode::integrate_times(ode::make_dense_output(tol.abs, tol.rel, ode::runge_kutta_dopri5<St>()), rhs, y,
                             ts.begin(), ts.end(), dt, [&](const St& x, double t) {
                                 if (j++ == 0) return;
                                 const auto idx = static_cast<std::size_t>(
                                     std::lower_bound(times.begin(), times.end(), t) - times.begin());
                                 out[idx] = {t, x[0], separatrix_closed_form(C0, t)};
                             });
    };
    const auto split = std::lower_bound(times.begin(), times.end(), 0.0);
    if (split != times.end()) {
        auto b = split;
        if (*b == 0.0) {
            out[static_cast<std::size_t>(b - times.begin())] = {0.0, C0, separatrix_closed_form(C0, 0.0)};
            ++b;
        }
        if (b != times.end()) run(b, times.end(), 1e-3);
    }
    if (split != times.begin()) {
        std::vector<double> back(std::make_reverse_iterator(split), times.rend());
        run(back.begin(), back.end(), -1e-3);
    }
    return out;
}

/// Fast time scale eps^2 = R ln(1/R) / q0 of the quick rotation.
inline SeparatrixState separatrix_state(double R, double q0, double C_tilde, double t_fast = 0.0)
{
    if (!(R > 0.0 && R < 1.0) || !(q0 > 0.0)) throw PreconditionError("separatrix_state: need 0 < R < 1, q0 > 0");
    return {C_tilde, R, q0, std::sqrt(R * std::log(1.0 / R) / q0), t_fast};
}

// ---------------------------------------------------------------------------
// n >= 2
// ---------------------------------------------------------------------------

/// E_n = pi / (2 n^2 sin(pi/n)).
inline double En(int n)
{
    if (n < 2) throw PreconditionError("En: n must be at least 2");
    const double nn = n;
    return pi / (2.0 * nn * nn * std::sin(pi / nn));
}

namespace detail {

inline double gk(const std::function<double(double)>& f, double a, double b)
{
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

/// int_0^xi s^(2n+1) / (1 + s^(2n))^2 ds. The part beyond s = 1 uses s = 1/x,
/// which turns it into the smooth int x^(2n-3) / (1 + x^(2n))^2 dx.
inline double en_partial(int n, double xi)
{
    const double m = 2.0 * n;
    auto head = [m](double s) { return std::pow(s, m + 1.0) / std::pow(1.0 + std::pow(s, m), 2); };
    auto tail = [m](double x) { return std::pow(x, m - 3.0) / std::pow(1.0 + std::pow(x, m), 2); };
    if (xi <= 1.0) return gk(head, 0.0, xi);
    return gk(head, 0.0, 1.0) + gk(tail, 1.0 / xi, 1.0);
}

} // namespace detail

/// E_n by quadrature of int_0^inf s^(2n+1) / (1 + s^(2n))^2 ds.
inline double En_quadrature(int n)
{
    if (n < 2) throw PreconditionError("En_quadrature: n must be at least 2");
    return detail::en_partial(n, std::numeric_limits<double>::infinity());
}

/// phi_1 xi(xi) = [(xi^-2n + 2 + xi^2n) / xi] int_0^xi s^(2n+1)/(1+s^2n)^2 ds.
inline double phi1_inner(double xi, int n)
{
    if (n < 2) throw PreconditionError("phi1_inner: n must be at least 2");
    if (!(xi >= 0.0)) throw PreconditionError("phi1_inner: xi must be non-negative");
    if (xi == 0.0) return 0.0;
    const double m = 2.0 * n;
    // (xi^-2n + 2 + xi^2n) = (1 + xi^2n)^2 / xi^2n
    const double pre = std::pow(1.0 + std::pow(xi, m), 2) / std::pow(xi, m + 1.0);
    return pre * detail::en_partial(n, xi);
}

struct HigherNPoint {
    double t = 0.0;
    double R = 0.0;
    double C_tilde = 0.0;
};

struct HigherNResult {
    std::vector<HigherNPoint> path;
    std::optional<double> exit_time;      ///< first |C~ - C~(0)| > pi/4
    std::optional<double> collapse_time;  ///< R fell below r_floor
    std::optional<double> settle_time;    ///< C~ came within settle_tol of another multiple of pi
};

struct HigherNOptions {
    double r_floor = 1e-12;
    double r_cap = 1e6;
    double settle_tol = 1e-6;
    std::size_t max_points = 100000;
    OdeTolerance tol;
};

/// C~' = (n q0 / E_n) R^(n-2) sin C~,  R' = -(q0 / E_n) R^(n-1) cos C~.
inline HigherNResult higher_n_system(double R0, double C0, int n, double q0, double t_end,
                                     const HigherNOptions& opt = {})
{
    namespace ode = boost::numeric::odeint;
    if (!(R0 > 0.0) || n < 2 || !(q0 > 0.0)) throw PreconditionError("higher_n_system: need R0 > 0, n >= 2, q0 > 0");
    if (!(t_end > 0.0)) throw PreconditionError("higher_n_system: t_end must be positive");
    const double a = q0 / En(n);
    using St = std::array<double, 2>;  // (R, C~)
    auto rhs = [a, n](const St& x, St& dx, double) {
        const double Rn2 = std::pow(x[0], n - 2);
        dx[0] = -a * Rn2 * x[0] * std::cos(x[1]);
        dx[1] = n * a * Rn2 * std::sin(x[1]);
    };
    auto stepper = ode::make_dense_output(opt.tol.abs, opt.tol.rel, ode::runge_kutta_dopri5<St>());
    stepper.initialize(St{R0, C0}, 0.0, 1e-3);
    HigherNResult res;
    res.path.push_back({0.0, R0, C0});
    const double k0 = std::round(C0 / pi);
    while (stepper.current_time() < t_end && res.path.size() < opt.max_points) {
        stepper.do_step(rhs);
        double t = stepper.current_time();
        St x = stepper.current_state();
        if (t > t_end) {
            stepper.calc_state(t_end, x);
            t = t_end;
        }
        res.path.push_back({t, x[0], x[1]});
        if (!res.exit_time && std::abs(x[1] - C0) > 0.25 * pi) res.exit_time = t;
        const double k = std::round(x[1] / pi);
        if (k != k0 && std::abs(x[1] - k * pi) < opt.settle_tol) {
            res.settle_time = t;
            break;
        }
        if (x[0] < opt.r_floor) {
            res.collapse_time = t;
            break;
        }
        if (x[0] > opt.r_cap || !std::isfinite(x[0])) break;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Outer linearization at the south pole
// ---------------------------------------------------------------------------

/// (beta - i alpha)(z_rr + z_r / r - z / r^2) with the three-point stencils;
/// zero at both end nodes.
inline std::vector<cplx> tangent_plane_rhs(const std::vector<cplx>& z, const RadialMesh& mesh, const LLGParams& p)
{
    if (z.size() != mesh.size()) throw PreconditionError("tangent_plane_rhs: size mismatch");
    const SpatialOperators ops(mesh);
    const std::span<const double> flat(reinterpret_cast<const double*>(z.data()), 2 * z.size());
    const cplx k(p.beta(), -p.alpha());
    std::vector<cplx> out(z.size(), cplx(0.0, 0.0));
    for (std::size_t i = 1; i + 1 < z.size(); ++i) {
        const double r = mesh[i];
        const cplx zrr(ops.d2dr2(flat, i, 2, 0), ops.d2dr2(flat, i, 2, 1));
        const cplx zr(ops.ddr(flat, i, 2, 0), ops.ddr(flat, i, 2, 1));
        out[i] = k * (zrr + zr / r - z[i] / (r * r));
    }
    return out;
}

} // namespace llg
