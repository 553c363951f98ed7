#pragma once

// r-adaptive radial mesh: nonuniform stencils, arclength-type monitor,
// moving-mesh relaxation, Sundman time scaling and field transfer.

#include "core.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace llg {

/// Monotone node set on [0, 1]; computational coordinate xi_i = i / (N - 1).
class RadialMesh {
public:
    RadialMesh() = default;

    explicit RadialMesh(std::vector<double> nodes) : r_(std::move(nodes)) { validate(); }

    static RadialMesh uniform(std::size_t n)
    {
        if (n < 4) throw InvalidMeshError("RadialMesh: need at least 4 nodes");
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<double>(i) / static_cast<double>(n - 1);
        r.back() = 1.0;
        return RadialMesh(std::move(r));
    }

    std::size_t size() const { return r_.size(); }
    double operator[](std::size_t i) const { return r_[i]; }
    std::span<const double> nodes() const { return r_; }
    double dxi() const { return 1.0 / static_cast<double>(r_.size() - 1); }

    double min_spacing() const
    {
        double h = 1.0;
        for (std::size_t i = 0; i + 1 < r_.size(); ++i) h = std::min(h, r_[i + 1] - r_[i]);
        return h;
    }

    bool operator==(const RadialMesh&) const = default;

private:
    void validate() const
    {
        if (r_.size() < 4) throw InvalidMeshError("RadialMesh: need at least 4 nodes");
        if (r_.front() != 0.0 || r_.back() != 1.0) throw InvalidMeshError("RadialMesh: endpoints must be 0 and 1");
        for (std::size_t i = 0; i + 1 < r_.size(); ++i)
            if (!(r_[i + 1] - r_[i] > 1e-14))
                throw InvalidMeshError("RadialMesh: nodes not strictly increasing at index " + std::to_string(i));
    }

    std::vector<double> r_;
};

// ---------------------------------------------------------------------------
// Three-point nonuniform finite differences
// ---------------------------------------------------------------------------

/// Weights (left, centre, right) for d/dr and d2/dr2 at each node. Interior
/// nodes use central three-point formulas; the end nodes carry one-sided
/// second-order first-derivative weights (on nodes 0,1,2 and N-3,N-2,N-1) and
/// no second derivative.
struct SpatialOperators {
    std::vector<std::array<double, 3>> d1;
    std::vector<std::array<double, 3>> d2;
    std::vector<std::array<double, 3>> lap;  ///< (1/r)(r f_r)_r in flux form

    explicit SpatialOperators(const RadialMesh& mesh)
    {
        const std::size_t n = mesh.size();
        d1.resize(n);
        d2.resize(n);
        lap.resize(n);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hm = mesh[i] - mesh[i - 1];
            const double hp = mesh[i + 1] - mesh[i];
            const double hs = hm + hp;
            d1[i] = {-hp / (hm * hs), (hp - hm) / (hm * hp), hm / (hp * hs)};
            d2[i] = {2.0 / (hm * hs), -2.0 / (hm * hp), 2.0 / (hp * hs)};
            const double rm = 0.5 * (mesh[i - 1] + mesh[i]), rp = 0.5 * (mesh[i] + mesh[i + 1]);
            const double vol = 0.5 * hs * mesh[i];
            lap[i] = {rm / (hm * vol), -(rm / hm + rp / hp) / vol, rp / (hp * vol)};
        }
        {
            const double h1 = mesh[1] - mesh[0];
            const double h2 = mesh[2] - mesh[1];
            d1[0] = {-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))};
            d2[0] = {0.0, 0.0, 0.0};
        }
        {
            const double h1 = mesh[n - 1] - mesh[n - 2];
            const double h2 = mesh[n - 2] - mesh[n - 3];
            d1[n - 1] = {h1 / (h2 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (2.0 * h1 + h2) / (h1 * (h1 + h2))};
            d2[n - 1] = {0.0, 0.0, 0.0};
        }
    }

    /// First derivative of a strided sample array at node i.
    double ddr(std::span<const double> f, std::size_t i, std::size_t stride = 1, std::size_t offset = 0) const
    {
        const std::size_t n = d1.size();
        auto at = [&](std::size_t k) { return f[k * stride + offset]; };
        if (i == 0) return d1[0][0] * at(0) + d1[0][1] * at(1) + d1[0][2] * at(2);
        if (i == n - 1) return d1[i][0] * at(n - 3) + d1[i][1] * at(n - 2) + d1[i][2] * at(n - 1);
        return d1[i][0] * at(i - 1) + d1[i][1] * at(i) + d1[i][2] * at(i + 1);
    }

    /// Second derivative at an interior node.
    double d2dr2(std::span<const double> f, std::size_t i, std::size_t stride = 1, std::size_t offset = 0) const
    {
        auto at = [&](std::size_t k) { return f[k * stride + offset]; };
        return d2[i][0] * at(i - 1) + d2[i][1] * at(i) + d2[i][2] * at(i + 1);
    }

    /// Radial Laplacian f_rr + f_r / r at an interior node.
    double laplacian(std::span<const double> f, std::size_t i, std::size_t stride = 1, std::size_t offset = 0) const
    {
        auto at = [&](std::size_t k) { return f[k * stride + offset]; };
        return lap[i][0] * at(i - 1) + lap[i][1] * at(i) + lap[i][2] * at(i + 1);
    }

    std::vector<double> ddr_all(std::span<const double> f, std::size_t stride = 1, std::size_t offset = 0) const
    {
        std::vector<double> out(d1.size());
        for (std::size_t i = 0; i < d1.size(); ++i) out[i] = ddr(f, i, stride, offset);
        return out;
    }
};

/// |grad m| = sqrt(u_r^2 + v_r^2 + w_r^2) per node.
inline std::vector<double> gradient_density(const MagnetizationField& f, const RadialMesh& mesh)
{
    if (f.size() != mesh.size()) throw PreconditionError("gradient_density: field/mesh size mismatch");
    const SpatialOperators ops(mesh);
    std::vector<double> g(mesh.size());
    const auto y = f.flat();
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const double ur = ops.ddr(y, i, 3, 0);
        const double vr = ops.ddr(y, i, 3, 1);
        const double wr = ops.ddr(y, i, 3, 2);
        g[i] = std::sqrt(ur * ur + vr * vr + wr * wr);
    }
    return g;
}

/// |theta_r| per node for the scalar radial formulation.
inline std::vector<double> gradient_density(std::span<const double> theta, const RadialMesh& mesh)
{
    const SpatialOperators ops(mesh);
    std::vector<double> g = ops.ddr_all(theta);
    for (double& x : g) x = std::abs(x);
    return g;
}

inline double trapezoid(std::span<const double> f, const RadialMesh& mesh)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) s += 0.5 * (f[i] + f[i + 1]) * (mesh[i + 1] - mesh[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Monitor
// ---------------------------------------------------------------------------

enum class IntegralWeight { dr, r_dr };

struct MeshConfig {
    std::size_t n_nodes = 201;
    double tau_mm = 1e-2;
    int smooth_passes = 4;
    double floor_abs = 1e-8;
    double floor_rel = 0.0;  ///< relative floor (times max M); a large value starves the core
    IntegralWeight integral_weight = IntegralWeight::dr;
};

struct MonitorField {
    std::vector<double> values;

    double max() const { return *std::max_element(values.begin(), values.end()); }
};

/// One pass of (1/4, 1/2, 1/4) averaging in index space, reflective ends.
inline void smooth_pass(std::vector<double>& m)
{
    const std::size_t n = m.size();
    if (n < 3) return;
    std::vector<double> s(n);
    s[0] = 0.5 * m[0] + 0.5 * m[1];
    s[n - 1] = 0.5 * m[n - 1] + 0.5 * m[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) s[i] = 0.25 * m[i - 1] + 0.5 * m[i] + 0.25 * m[i + 1];
    m.swap(s);
}

/// M = |grad m| + int |grad m|, smoothed and floored.
inline MonitorField monitor_from_density(std::span<const double> density, const RadialMesh& mesh,
                                         const MeshConfig& cfg = {})
{
    std::vector<double> m(density.begin(), density.end());
    double integral = 0.0;
    if (cfg.integral_weight == IntegralWeight::dr) {
        integral = trapezoid(density, mesh);
    } else {
        std::vector<double> wr(density.size());
        for (std::size_t i = 0; i < wr.size(); ++i) wr[i] = density[i] * mesh[i];
        integral = trapezoid(wr, mesh);
    }
    for (double& x : m) x += integral;
    for (int k = 0; k < cfg.smooth_passes; ++k) smooth_pass(m);
    const double floor = cfg.floor_abs + cfg.floor_rel * *std::max_element(m.begin(), m.end());
    for (double& x : m) x = std::max(x, floor);
    return {std::move(m)};
}

inline MonitorField monitor(const MagnetizationField& f, const RadialMesh& mesh, const MeshConfig& cfg = {})
{
    const auto g = gradient_density(f, mesh);
    return monitor_from_density(g, mesh, cfg);
}

inline double sundman_dt(const MonitorField& m, double ds)
{
    if (!(ds > 0.0)) throw PreconditionError("sundman_dt: ds must be positive");
    return ds / m.max();
}

// ---------------------------------------------------------------------------
// Mesh motion
// ---------------------------------------------------------------------------

/// One backward-Euler step of the relaxation law
///     tau * r_s = (M r_xi)_xi / M
/// with the monitor frozen at its nodal values. Dividing by the local M makes
/// the relaxation rate independent of the size of M, so the mesh follows a
/// shrinking core at the same pace in s on every scale. The implicit
/// tridiagonal system is an M-matrix, so node order is preserved; the
/// monotonicity check below guards against round-off in extreme meshes.
inline RadialMesh move_mesh(const RadialMesh& mesh, const MonitorField& mon, double ds, double tau = 1e-2)
{
    if (ds < 0.0) throw PreconditionError("move_mesh: ds must be non-negative");
    if (mon.values.size() != mesh.size()) throw PreconditionError("move_mesh: monitor/mesh size mismatch");
    if (ds == 0.0) return mesh;

    const std::size_t n = mesh.size();
    const auto& M = mon.values;
    const double dxi = mesh.dxi();
    const double c = ds / (tau * dxi * dxi);

    std::vector<double> half(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) half[i] = 0.5 * (M[i] + M[i + 1]);

    // Thomas algorithm on interior unknowns 1..n-2.
    std::vector<double> a(n, 0.0), b(n, 1.0), cc(n, 0.0), d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = mesh[i];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double ci = c / M[i];
        a[i] = -ci * half[i - 1];
        cc[i] = -ci * half[i];
        b[i] = 1.0 + ci * (half[i - 1] + half[i]);
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double w = (i + 1 < n) ? a[i] / b[i - 1] : 0.0;
        b[i] -= w * cc[i - 1];
        d[i] -= w * d[i - 1];
    }
    std::vector<double> r(n);
    r[n - 1] = 1.0;
    for (std::size_t i = n - 2; i >= 1; --i) r[i] = (d[i] - cc[i] * r[i + 1]) / b[i];
    r[0] = 0.0;

    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(r[i + 1] - r[i] > 1e-14)) throw MeshTanglingError("move_mesh: mesh lost monotonicity; reduce ds");
    return RadialMesh(std::move(r));
}

/// Per-cell integrals of M (trapezoid), used to judge equidistribution.
inline std::vector<double> cell_masses(const RadialMesh& mesh, const MonitorField& mon)
{
    std::vector<double> c(mesh.size() - 1);
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i)
        c[i] = 0.5 * (mon.values[i] + mon.values[i + 1]) * (mesh[i + 1] - mesh[i]);
    return c;
}

// ---------------------------------------------------------------------------
// Transfer between meshes
// ---------------------------------------------------------------------------

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes with
/// the weighted harmonic mean of Fritsch-Butland, one-sided three-point end
/// slopes limited for shape preservation).
class Pchip {
public:
    Pchip(std::span<const double> x, std::span<const double> y) : x_(x.begin(), x.end()), y_(y.begin(), y.end())
    {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw PreconditionError("Pchip: need matching arrays of at least 2 points");
        std::vector<double> h(n - 1), del(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            del[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        d_.assign(n, 0.0);
        if (n == 2) {
            d_[0] = d_[1] = del[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (del[i - 1] * del[i] > 0.0) {
                const double w1 = 2.0 * h[i] + h[i - 1];
                const double w2 = h[i] + 2.0 * h[i - 1];
                d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
            }
        }
        d_[0] = end_slope(h[0], h[1], del[0], del[1]);
        d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    }

    double operator()(double t) const
    {
        const std::size_t n = x_.size();
        std::size_t k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
        k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
        const double h = x_[k + 1] - x_[k];
        const double s = (t - x_[k]) / h;
        const double s2 = s * s, s3 = s2 * s;
        return (2.0 * s3 - 3.0 * s2 + 1.0) * y_[k] + (s3 - 2.0 * s2 + s) * h * d_[k] +
               (-2.0 * s3 + 3.0 * s2) * y_[k + 1] + (s3 - s2) * h * d_[k + 1];
    }

private:
    static double end_slope(double h0, double h1, double del0, double del1)
    {
        double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if (d * del0 <= 0.0)
            d = 0.0;
        else if (del0 * del1 <= 0.0 && std::abs(d) > 3.0 * std::abs(del0))
            d = 3.0 * del0;
        return d;
    }

    std::vector<double> x_, y_, d_;
};

/// Monotone piecewise-cubic resampling; end values copied exactly.
inline std::vector<double> interpolate(std::span<const double> values, const RadialMesh& from, const RadialMesh& to,
                                       std::size_t stride = 1, std::size_t offset = 0)
{
    std::vector<double> out(to.size());
    std::vector<double> y(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) y[i] = values[i * stride + offset];
    if (from == to) return y;
    const Pchip spline(from.nodes(), y);
    out.front() = y.front();
    out.back() = y.back();
    for (std::size_t i = 1; i + 1 < to.size(); ++i) out[i] = spline(to[i]);
    return out;
}

inline MagnetizationField interpolate(const MagnetizationField& f, const RadialMesh& from, const RadialMesh& to)
{
    if (from == to) return f;
    MagnetizationField out(to.size());
    for (std::size_t c = 0; c < 3; ++c) {
        const auto comp = interpolate(f.flat(), from, to, 3, c);
        for (std::size_t i = 0; i < to.size(); ++i) out.flat()[3 * i + c] = comp[i];
    }
    project_to_sphere_inplace(out);
    return out;
}

inline EulerField interpolate(const EulerField& f, const RadialMesh& from, const RadialMesh& to)
{
    if (from == to) return f;
    return EulerField(interpolate(f.theta, from, to), interpolate(f.phi, from, to));
}

} // namespace llg
