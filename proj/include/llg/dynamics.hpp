#pragma once

// Right-hand sides of the equivariant LLG system in Cartesian, Euler-angle
// and scalar radial form, plus the Dirichlet energy and gradient norms.

#include "mesh.hpp"

namespace llg {

/// Rates for the Cartesian (u, v, w) system on a flat interleaved span.
/// With F = Delta_h m - n^2 (u, v, 0) / r^2 (flux-form radial Laplacian, so F
/// is the nodal gradient of the discrete energy up to a positive weight):
///     m_t = alpha m x F + beta (F - (m . F) m / |m|^2).
/// For |m| = 1 this is the equivariant LLG system, with -(m . F) playing the
/// role of |m_r|^2 + n^2 (u^2 + v^2) / r^2. Dividing by |m|^2 keeps the rate
/// tangent off the sphere too; the plain form makes the normal direction grow
/// at rate |m_r|^2, which a stiff solver sees near blowup. Node 0 is the pole
/// and node N-1 carries Dirichlet data; both get zero rate.
inline void rhs_3comp(std::span<const double> y, const RadialMesh& mesh, const SpatialOperators& ops,
                      const LLGParams& p, std::span<double> out)
{
    const std::size_t n = mesh.size();
    const double a = p.alpha(), b = p.beta();
    const double n2 = static_cast<double>(p.n()) * static_cast<double>(p.n());
    out[0] = out[1] = out[2] = 0.0;
    out[3 * (n - 1)] = out[3 * (n - 1) + 1] = out[3 * (n - 1) + 2] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double r = mesh[i];
        const double u = y[3 * i], v = y[3 * i + 1], w = y[3 * i + 2];
        const double k = n2 / (r * r);
        const double fu = ops.laplacian(y, i, 3, 0) - k * u;
        const double fv = ops.laplacian(y, i, 3, 1) - k * v;
        const double fw = ops.laplacian(y, i, 3, 2);
        const double mf = (u * fu + v * fv + w * fw) / (u * u + v * v + w * w);
        out[3 * i] = a * (v * fw - w * fv) + b * (fu - mf * u);
        out[3 * i + 1] = a * (w * fu - u * fw) + b * (fv - mf * v);
        out[3 * i + 2] = a * (u * fv - v * fu) + b * (fw - mf * w);
    }
}

inline MagnetizationField rhs_3comp(const MagnetizationField& f, const RadialMesh& mesh, const LLGParams& p)
{
    if (f.size() != mesh.size()) throw PreconditionError("rhs_3comp: field/mesh size mismatch");
    const SpatialOperators ops(mesh);
    MagnetizationField out(f.size());
    rhs_3comp(f.flat(), mesh, ops, p, out.flat());
    return out;
}

/// theta_t = theta_rr + theta_r / r - n^2 sin(2 theta) / (2 r^2); Dirichlet ends.
inline void rhs_radial(std::span<const double> theta, const RadialMesh& mesh, const SpatialOperators& ops,
                       std::span<double> out, int n = 1)
{
    const std::size_t nn = mesh.size();
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    out[0] = 0.0;
    out[nn - 1] = 0.0;
    for (std::size_t i = 1; i + 1 < nn; ++i) {
        const double r = mesh[i];
        out[i] = ops.laplacian(theta, i) - n2 * std::sin(2.0 * theta[i]) / (2.0 * r * r);
    }
}

inline std::vector<double> rhs_radial(std::span<const double> theta, const RadialMesh& mesh, int n = 1)
{
    if (theta.size() != mesh.size()) throw PreconditionError("rhs_radial: field/mesh size mismatch");
    const SpatialOperators ops(mesh);
    std::vector<double> out(mesh.size());
    rhs_radial(theta, mesh, ops, out, n);
    return out;
}

struct EulerRates {
    std::vector<double> theta_t;
    std::vector<double> phi_t;
    std::vector<std::size_t> regularized;  ///< interior nodes where 1/sin(theta) was regularized
};

/// Explicit form of the Euler-angle system. With the 2x2 operator
/// [[beta, alpha s], [-alpha / s, beta]] (s = sin theta, determinant 1):
///     theta_t = beta F_theta - alpha s F_phi,
///     phi_t   = alpha F_theta / s + beta F_phi.
/// 1/s is replaced by s / (s^2 + delta^2).
inline EulerRates rhs_euler(const EulerField& f, const RadialMesh& mesh, const LLGParams& p, double delta = 1e-8,
                            double flag_floor = 1e-6)
{
    if (f.size() != mesh.size()) throw PreconditionError("rhs_euler: field/mesh size mismatch");
    const std::size_t n = mesh.size();
    const SpatialOperators ops(mesh);
    const double a = p.alpha(), b = p.beta();
    const double n2 = static_cast<double>(p.n()) * static_cast<double>(p.n());
    EulerRates out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), {}};
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double r = mesh[i];
        const double th = f.theta[i];
        const double thr = ops.ddr(f.theta, i), phr = ops.ddr(f.phi, i);
        const double s = std::sin(th), c = std::cos(th);
        const double inv_s = s / (s * s + delta * delta);
        if (std::abs(s) < flag_floor) out.regularized.push_back(i);
        const double Ft = ops.laplacian(f.theta, i) - s * c * (n2 / (r * r) + phr * phr);
        const double Fp = ops.laplacian(f.phi, i) + 2.0 * c * inv_s * phr * thr;
        out.theta_t[i] = b * Ft - a * s * Fp;
        out.phi_t[i] = a * Ft * inv_s + b * Fp;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Energy and gradient norms
// ---------------------------------------------------------------------------

/// E = pi int_0^1 [ |m_r|^2 + n^2 (u^2 + v^2) / r^2 ] r dr. The gradient part
/// uses cell differences at cell midpoints, the angular part the trapezoid
/// rule with the r -> 0 limit (u^2 + v^2) / r -> 0. The flux-form rates above
/// are the nodal gradient of exactly this sum.
inline double energy(const MagnetizationField& f, const RadialMesh& mesh, int n = 1)
{
    if (f.size() != mesh.size()) throw PreconditionError("energy: field/mesh size mismatch");
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    double grad = 0.0;
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
        const double h = mesh[i + 1] - mesh[i];
        const double du = f.u(i + 1) - f.u(i), dv = f.v(i + 1) - f.v(i), dw = f.w(i + 1) - f.w(i);
        grad += (du * du + dv * dv + dw * dw) / h * 0.5 * (mesh[i] + mesh[i + 1]);
    }
    std::vector<double> ang(mesh.size(), 0.0);
    for (std::size_t i = 1; i < mesh.size(); ++i) ang[i] = n2 * (f.u(i) * f.u(i) + f.v(i) * f.v(i)) / mesh[i];
    return pi * (grad + trapezoid(ang, mesh));
}

inline double energy(const EulerField& f, const RadialMesh& mesh, int n = 1)
{
    return energy(to_cartesian(f), mesh, n);
}

/// Scalar radial energy pi int [theta_r^2 + n^2 sin^2(theta) / r^2] r dr.
inline double energy_radial(std::span<const double> theta, const RadialMesh& mesh, int n = 1)
{
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    double grad = 0.0;
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
        const double h = mesh[i + 1] - mesh[i];
        const double d = theta[i + 1] - theta[i];
        grad += d * d / h * 0.5 * (mesh[i] + mesh[i + 1]);
    }
    std::vector<double> ang(mesh.size(), 0.0);
    for (std::size_t i = 1; i < mesh.size(); ++i) {
        const double s = std::sin(theta[i]);
        ang[i] = n2 * s * s / mesh[i];
    }
    return pi * (grad + trapezoid(ang, mesh));
}

inline double gradient_norm_inf(const MagnetizationField& f, const RadialMesh& mesh)
{
    const auto g = gradient_density(f, mesh);
    return *std::max_element(g.begin(), g.end());
}

inline double gradient_norm_inf(std::span<const double> theta, const RadialMesh& mesh)
{
    const auto g = gradient_density(theta, mesh);
    return *std::max_element(g.begin(), g.end());
}

} // namespace llg
