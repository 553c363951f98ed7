// Structural invariants checked over randomized parameters and data.

#include "llg/llg.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace llg;

namespace {

struct Case {
    double gamma, alpha, beta;
};

std::vector<Case> cases(unsigned seed, int n)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> g(0.05, 0.4), a(0.0, 1.0);
    std::vector<Case> out;
    for (int k = 0; k < n; ++k) out.push_back({g(rng), a(rng), 0.2 + a(rng)});
    return out;
}

} // namespace

TEST(Properties, UnitNormAfterEveryAcceptedStep)
{
    for (const auto& c : cases(11, 6)) {
        const CartesianModel model{LLGParams(c.alpha, c.beta)};
        IntegratorConfig cfg;
        double worst = 0.0;
        long seen = 0;
        const Observer<CartesianModel> obs = [&](const SimState<MagnetizationField>& s, const Sample&) {
            worst = std::max(worst, max_norm_defect(s.field));
            ++seen;
        };
        auto sample = [&](const RadialMesh& m) { return gamma_family(m, c.gamma); };
        run_until(make_state(model, sample, cfg), model, {1e4, 0.2, 300L, std::nullopt}, cfg, {}, obs);
        EXPECT_GT(seen, 10);
        EXPECT_LE(worst, 1e-12) << "gamma " << c.gamma << " alpha " << c.alpha;
    }
}

TEST(Properties, DampedEnergyNeverRisesOnAcceptedSteps)
{
    // Remeshing is bookkept separately; the step itself may not raise E.
    for (const auto& c : cases(23, 6)) {
        const CartesianModel model{LLGParams(0.0, 1.0)};
        IntegratorConfig cfg;
        double prev_e = 0.0, prev_remap = 0.0;
        bool first = true, ok = true;
        const Observer<CartesianModel> obs = [&](const SimState<MagnetizationField>& s, const Sample& smp) {
            if (!first) {
                const double step_change = smp.energy - prev_e - (s.flags.remap_energy - prev_remap);
                if (step_change > 1e-6 * (1.0 + std::abs(prev_e))) ok = false;
            }
            first = false;
            prev_e = smp.energy;
            prev_remap = s.flags.remap_energy;
        };
        auto sample = [&](const RadialMesh& m) { return gamma_family(m, c.gamma); };
        run_until(make_state(model, sample, cfg), model, {1e4, 0.3, 400L, 1e-4}, cfg, {}, obs);
        EXPECT_TRUE(ok) << "gamma " << c.gamma;
    }
}

TEST(Properties, PrecessionConservesEnergy)
{
    const CartesianModel model{LLGParams(1.0, 0.0)};
    IntegratorConfig cfg;
    cfg.rtol = 1e-5;
    cfg.atol = 1e-7;
    cfg.remesh = false;
    auto sample = [](const RadialMesh& m) {
        MagnetizationField f(m.size());
        for (std::size_t i = 0; i < m.size(); ++i)
            f.set(i, euler_to_cartesian(0.6 * std::sin(pi * m[i]) * (1.0 + m[i]), 0.5 * m[i]));
        return f;
    };
    const auto st = make_state(model, sample, cfg, false);
    const double e0 = model.energy(st.field, st.mesh);
    const auto res = run_until(st, model, {std::nullopt, 1.0, std::nullopt, std::nullopt}, cfg);
    double worst = 0.0;
    for (const auto& s : res.samples) worst = std::max(worst, std::abs(s.energy - e0) / e0);
    EXPECT_LE(worst, 1e-4);
}

TEST(Properties, StationaryResidualOrder)
{
    for (double q : {0.5, 1.0, 2.0}) {
        auto err = [q](std::size_t n) {
            const auto m = RadialMesh::uniform(n);
            std::vector<double> th(n);
            for (std::size_t i = 0; i < n; ++i) th[i] = 2.0 * std::atan(q * m[i]);
            const auto r = rhs_radial(th, m);
            double e = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (m[i] >= 0.1) e = std::max(e, std::abs(r[i]));
            return e;
        };
        EXPECT_GE(std::log2(err(201) / err(401)), 1.9) << "q = " << q;
    }
}

TEST(Properties, DegreeOfFamilies)
{
    const auto north = sample_family(
        [](double s) { return degree1_family(RadialMesh::uniform(101), s, Degree1Variant::north); }, 101, 101);
    EXPECT_EQ(degree(north), 1);
    const auto constant =
        sample_family([](double) { return MagnetizationField::constant(101, {0, 0, 1}); }, 101, 101);
    EXPECT_EQ(degree(constant), 0);
}

TEST(Properties, ProjectionIdempotent)
{
    std::mt19937 rng(5);
    std::normal_distribution<double> d;
    MagnetizationField f(500);
    for (auto& x : f.flat()) x = d(rng);
    const auto a = project_to_sphere(f);
    const auto b = project_to_sphere(a);
    EXPECT_LE(max_norm_defect(a), 1e-15);
    for (std::size_t i = 0; i < a.flat().size(); ++i) EXPECT_NEAR(a.flat()[i], b.flat()[i], 4e-16);
}
