#pragma once

// Initial-data families built from the inverse stereographic projection, and a
// signed-area degree checker for two-parameter families of maps into S^2.

#include "mesh.hpp"

#include <functional>

namespace llg {

/// T(x, y) = (2x, 2y, -1 + x^2 + y^2) / (1 + x^2 + y^2).
inline Vec3 stereographic(double x, double y)
{
    if (!std::isfinite(x) || !std::isfinite(y)) throw PreconditionError("stereographic: non-finite argument");
    const double d = 1.0 + x * x + y * y;
    return {2.0 * x / d, 2.0 * y / d, (x * x + y * y - 1.0) / d};
}

namespace detail {

/// T(tan a, tan b) written in homogeneous form so that a or b at +-pi/2 gives
/// the north pole without evaluating tan there.
inline Vec3 stereographic_tan(double a, double b)
{
    const double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
    const double ca2 = ca * ca, cb2 = cb * cb;
    const double d = ca2 * cb2 + sa * sa * cb2 + sb * sb * ca2;
    if (d == 0.0) return {0.0, 0.0, 1.0};
    Vec3 m{2.0 * sa * ca * cb2 / d, 2.0 * sb * cb * ca2 / d, (sa * sa * cb2 + sb * sb * ca2 - ca2 * cb2) / d};
    const double nm = norm(m);
    return {m[0] / nm, m[1] / nm, m[2] / nm};
}

} // namespace detail

/// theta(r) = (4/3) pi r, phi = 0.
inline EulerField theta_linear(const RadialMesh& mesh, double phi = 0.0)
{
    EulerField f(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        f.theta[i] = 4.0 / 3.0 * pi * mesh[i];
        f.phi[i] = phi;
    }
    return f;
}

/// Cartesian form of the linear data with a fixed azimuth; phi = pi/4 gives
/// u = v = sin((4/3) pi r) / sqrt 2.
inline MagnetizationField theta_linear_cartesian(const RadialMesh& mesh, double phi = pi / 4.0)
{
    MagnetizationField f(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const double th = 4.0 / 3.0 * pi * mesh[i];
        f.set(i, {std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th)});
    }
    f.set(0, {0.0, 0.0, 1.0});
    return f;
}

/// m = T(tan(-pi/2 + r pi), tan(-pi/2 + gamma pi)); r in {0, 1} and gamma in
/// {0, 1} are the north pole.
inline MagnetizationField gamma_family(const RadialMesh& mesh, double gamma)
{
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw PreconditionError("gamma_family: gamma must lie in [0, 1]");
    MagnetizationField f(mesh.size());
    const bool pole = gamma == 0.0 || gamma == 1.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const double r = mesh[i];
        if (pole || r == 0.0 || r == 1.0) {
            f.set(i, {0.0, 0.0, 1.0});
            continue;
        }
        f.set(i, detail::stereographic_tan(-0.5 * pi + r * pi, -0.5 * pi + gamma * pi));
    }
    return f;
}

enum class Degree1Variant { generic, north };

/// Degree-one families. generic: T(x_b + x_b cos(2 pi s)(1-r)/r,
/// x_b sin(2 pi s)(1-r)/r) with x_b = tan((pi - theta_b)/2); north:
/// T(tan(pi(r - 1/2)), tan(pi(s - 1/2))).
inline MagnetizationField degree1_family(const RadialMesh& mesh, double s, Degree1Variant variant,
                                         double theta_b = pi / 2.0)
{
    if (!(s >= 0.0 && s <= 1.0)) throw PreconditionError("degree1_family: s must lie in [0, 1]");
    MagnetizationField f(mesh.size());
    if (variant == Degree1Variant::north) {
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            const double r = mesh[i];
            if (r == 0.0 || r == 1.0 || s == 0.0 || s == 1.0)
                f.set(i, {0.0, 0.0, 1.0});
            else
                f.set(i, detail::stereographic_tan(pi * (r - 0.5), pi * (s - 0.5)));
        }
        return f;
    }
    if (!(theta_b >= 0.0 && theta_b < pi)) throw PreconditionError("degree1_family: theta_b must lie in [0, pi)");
    const double xb = std::tan(0.5 * (pi - theta_b));
    const double c = std::cos(2.0 * pi * s), sn = std::sin(2.0 * pi * s);
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const double r = mesh[i];
        if (r == 0.0) {
            f.set(i, {0.0, 0.0, 1.0});
            continue;
        }
        // Homogeneous form with weight r avoids the 1/r blowup near the pole.
        const double X = xb * (r + c * (1.0 - r)), Y = xb * sn * (1.0 - r);
        const double d = r * r + X * X + Y * Y;
        Vec3 m{2.0 * X * r / d, 2.0 * Y * r / d, (X * X + Y * Y - r * r) / d};
        const double nm = norm(m);
        f.set(i, {m[0] / nm, m[1] / nm, m[2] / nm});
    }
    return f;
}

/// Samples a two-parameter family on a uniform (r, s) grid: out[j][i] is the
/// image of (r_i, s_j).
inline std::vector<std::vector<Vec3>> sample_family(const std::function<MagnetizationField(double)>& family,
                                                    std::size_t nr, std::size_t ns)
{
    if (nr < 2 || ns < 2) throw PreconditionError("sample_family: need at least 2 samples per direction");
    const RadialMesh mesh = RadialMesh::uniform(std::max<std::size_t>(nr, 4));
    if (mesh.size() != nr) throw PreconditionError("sample_family: need at least 4 radial samples");
    std::vector<std::vector<Vec3>> out(ns, std::vector<Vec3>(nr));
    for (std::size_t j = 0; j < ns; ++j) {
        const double s = static_cast<double>(j) / static_cast<double>(ns - 1);
        const MagnetizationField f = family(s);
        for (std::size_t i = 0; i < nr; ++i) out[j][i] = f.at(i);
    }
    return out;
}

namespace detail {

inline double geodesic(const Vec3& a, const Vec3& b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

/// Signed solid angle of the spherical triangle (a, b, c) (Van Oosterom and
/// Strackee).
inline double signed_area(const Vec3& a, const Vec3& b, const Vec3& c)
{
    const double num = dot(a, cross(b, c));
    const double den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    return 2.0 * std::atan2(num, den);
}

} // namespace detail

/// Degree of the map (r, s) -> S^2 sampled on a grid whose boundary maps to a
/// point or whose s-ends coincide. Each grid cell is split into two
/// triangles; the signed areas are summed and divided by 4 pi. The parameter
/// square is oriented by (s, r) and the sphere by its outward normal, so the
/// north and gamma families count +1 and the generic family, whose radius
/// decreases in r, counts -1.
inline int degree(const std::vector<std::vector<Vec3>>& samples, double max_step = pi / 2.0)
{
    const std::size_t ns = samples.size();
    if (ns < 2 || samples[0].size() < 2) throw PreconditionError("degree: need at least a 2 x 2 grid");
    const std::size_t nr = samples[0].size();
    for (const auto& row : samples)
        if (row.size() != nr) throw PreconditionError("degree: ragged sample grid");
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < ns; ++j) {
        for (std::size_t i = 0; i + 1 < nr; ++i) {
            const Vec3& a = samples[j][i];
            const Vec3& b = samples[j][i + 1];
            const Vec3& c = samples[j + 1][i + 1];
            const Vec3& d = samples[j + 1][i];
            if (detail::geodesic(a, b) > max_step || detail::geodesic(a, d) > max_step ||
                detail::geodesic(b, c) > max_step || detail::geodesic(d, c) > max_step ||
                detail::geodesic(a, c) > max_step)
                throw ResolutionError("degree: adjacent samples are too far apart; refine the grid");
            total += detail::signed_area(a, c, b) + detail::signed_area(a, d, c);
        }
    }
    return static_cast<int>(std::lround(total / (4.0 * pi)));
}

} // namespace llg
