#include "llg/mesh.hpp"

#include <gtest/gtest.h>

using namespace llg;

namespace {

RadialMesh graded(std::size_t n, double p)
{
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = std::pow(static_cast<double>(i) / (n - 1.0), p);
    return RadialMesh(r);
}

} // namespace

TEST(Mesh, UniformAndValidation)
{
    const auto m = RadialMesh::uniform(11);
    EXPECT_EQ(m.size(), 11u);
    EXPECT_DOUBLE_EQ(m[5], 0.5);
    EXPECT_THROW(RadialMesh::uniform(3), InvalidMeshError);
    EXPECT_THROW(RadialMesh({0.0, 0.5, 0.4, 1.0}), InvalidMeshError);
    EXPECT_THROW(RadialMesh({0.1, 0.2, 0.4, 1.0}), InvalidMeshError);
}

TEST(Operators, ExactOnQuadratics)
{
    const auto m = graded(41, 1.7);
    const SpatialOperators ops(m);
    std::vector<double> f(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) f[i] = 1.0 + 2.0 * m[i] - 3.0 * m[i] * m[i];
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(ops.ddr(f, i), 2.0 - 6.0 * m[i], 1e-9);
    for (std::size_t i = 1; i + 1 < m.size(); ++i) EXPECT_NEAR(ops.d2dr2(f, i), -6.0, 1e-7);
    // (1/r)(r f_r)_r of r^2 is 4; the flux form is exact on it for uniform spacing.
    const auto u = RadialMesh::uniform(41);
    const SpatialOperators uops(u);
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = u[i] * u[i];
    for (std::size_t i = 1; i + 1 < u.size(); ++i) EXPECT_NEAR(uops.laplacian(f, i), 4.0, 1e-9);
}

TEST(Operators, LaplacianConvergesOnGradedMesh)
{
    // Smoothly graded meshes: sup error over r >= 0.2 drops at second order.
    auto err = [](std::size_t n) {
        const auto m = graded(n, 1.5);
        const SpatialOperators ops(m);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = std::cos(3.0 * m[i]);
        double e = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (m[i] < 0.2) continue;
            const double r = m[i];
            const double exact = -9.0 * std::cos(3.0 * r) - 3.0 * std::sin(3.0 * r) / r;
            e = std::max(e, std::abs(ops.laplacian(f, i) - exact));
        }
        return e;
    };
    const double e1 = err(101), e2 = err(201);
    EXPECT_GT(std::log2(e1 / e2), 1.8);
}

TEST(Monitor, ConstantFieldGivesFloor)
{
    const auto m = RadialMesh::uniform(21);
    const auto f = MagnetizationField::constant(21, {0, 0, 1});
    const auto M = monitor(f, m);
    for (double x : M.values) EXPECT_DOUBLE_EQ(x, MeshConfig{}.floor_abs);
}

TEST(Monitor, BubblePeak)
{
    // Core resolved on a strongly graded mesh; no smoothing so the peak is
    // the raw density plus the total variation.
    const double R = 0.01;
    const auto m = graded(801, 3.0);
    std::vector<double> th(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) th[i] = 2.0 * std::atan(m[i] / R);
    MeshConfig cfg;
    cfg.smooth_passes = 0;
    const auto M = monitor_from_density(gradient_density(th, m), m, cfg);
    const double expect = 2.0 / R + (th.back() - th.front());
    EXPECT_NEAR(M.values[0], expect, 1e-3 * expect);
    EXPECT_EQ(std::max_element(M.values.begin(), M.values.end()) - M.values.begin(), 0);
}

TEST(Monitor, SmoothingKeepsIntegral)
{
    const auto m = RadialMesh::uniform(201);
    std::vector<double> d(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) d[i] = 1.0 + std::exp(-std::pow((m[i] - 0.5) / 0.05, 2));
    const double before = trapezoid(d, m);
    smooth_pass(d);
    EXPECT_NEAR(trapezoid(d, m), before, 0.01 * before);
}

TEST(Sundman, Scaling)
{
    MonitorField one{std::vector<double>(5, 1.0)};
    EXPECT_DOUBLE_EQ(sundman_dt(one, 0.3), 0.3);
    MonitorField M{{1.0, 200.0 + 4.0 * pi / 3.0, 3.0}};
    EXPECT_DOUBLE_EQ(sundman_dt(M, 1e-2), 1e-2 / (200.0 + 4.0 * pi / 3.0));
    MonitorField M2{{2.0, 2.0 * (200.0 + 4.0 * pi / 3.0), 6.0}};
    EXPECT_DOUBLE_EQ(sundman_dt(M2, 1e-2), 0.5 * sundman_dt(M, 1e-2));
    EXPECT_THROW(sundman_dt(M, 0.0), PreconditionError);
}

TEST(MoveMesh, ConstantMonitorKeepsUniform)
{
    const auto m = RadialMesh::uniform(31);
    MonitorField M{std::vector<double>(31, 2.5)};
    const auto moved = move_mesh(m, M, 0.1);
    for (std::size_t i = 0; i < 31; ++i) EXPECT_NEAR(moved[i], m[i], 1e-14);
    EXPECT_EQ(move_mesh(m, M, 0.0), m);
}

TEST(MoveMesh, RelaxesToEquidistribution)
{
    // Monitor of a bubble with R = 0.02, re-evaluated on every new mesh.
    auto density = [](const RadialMesh& m) {
        std::vector<double> d(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) d[i] = 2.0 * 0.02 / (0.02 * 0.02 + m[i] * m[i]);
        return d;
    };
    RadialMesh m = RadialMesh::uniform(101);
    MeshConfig cfg;
    cfg.smooth_passes = 0;
    for (int k = 0; k < 400; ++k) m = move_mesh(m, monitor_from_density(density(m), m, cfg), 0.05);
    EXPECT_LT(m[1], 0.1 * 0.01);
    const auto c = cell_masses(m, monitor_from_density(density(m), m, cfg));
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    EXPECT_LT((*hi - *lo) / *hi, 0.05);
}

TEST(Interpolate, IdentityAndLinear)
{
    const auto a = RadialMesh::uniform(21);
    const auto b = graded(33, 2.0);
    std::vector<double> f(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) f[i] = 0.3 - 1.7 * a[i];
    const auto same = interpolate(f, a, a);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(same[i], f[i]);
    const auto g = interpolate(f, a, b);
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(g[i], 0.3 - 1.7 * b[i], 1e-12);
}

TEST(Interpolate, BubbleRoundTripAgainstDenseOracle)
{
    const double R = 0.05;
    auto exact = [R](double r) { return 2.0 * std::atan(r / R); };
    const auto a = RadialMesh::uniform(201);
    const auto b = graded(201, 2.0);
    std::vector<double> f(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) f[i] = exact(a[i]);
    const auto fb = interpolate(f, a, b);
    // Dense evaluation of the interpolant on b against the exact profile.
    const Pchip p(b.nodes(), fb);
    double err = 0.0;
    for (int k = 0; k <= 20000; ++k) {
        const double r = k / 20000.0;
        err = std::max(err, std::abs(p(r) - exact(r)));
    }
    // Cubic Hermite bound on the coarser of the two meshes: h^3 max|f'''| / 24
    // with a limiter allowance of one order.
    const double h = 1.0 / 200.0;
    EXPECT_LT(err, 4.0 / (R * R) * h * h);
    const auto back = interpolate(fb, b, a);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(back[i], f[i], 4.0 / (R * R) * h * h);
}

TEST(Trapezoid, Quadratic)
{
    const auto m = RadialMesh::uniform(1001);
    std::vector<double> f(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) f[i] = m[i] * m[i];
    EXPECT_NEAR(trapezoid(f, m), 1.0 / 3.0, 1e-6);
}
