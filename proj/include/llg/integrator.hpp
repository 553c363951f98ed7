#pragma once

// Time stepping of the coupled (field, mesh, time) system in Sundman time s.
//
// Each step: a substep on the frozen mesh with dt = ds / max M (linearly
// implicit Rosenbrock 2(3) by default, Bogacki-Shampine 3(2) under a parabolic
// cap as the explicit alternative), projection onto the sphere, the discrete
// energy check, one relaxation step of the mesh, transfer of the field to the
// new mesh. The embedded error estimate drives ds.
//
// Well balancing: once a core is resolved, the discrete residual of the
// fitted bubble 2 arctan(r/R) is subtracted from the right-hand side. The
// continuous residual is zero, so the scheme stays consistent, but the
// O(h^2/R^2) truncation error of the core no longer drives a spurious
// collapse. The bubble is refitted at every stage and the Jacobian carries
// the matching rank-one term; without those the correction pins R.

#include "banded.hpp"
#include "bubble.hpp"
#include "dynamics.hpp"

#include <functional>
#include <numeric>
#include <optional>

namespace llg {

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Cartesian (u, v, w) formulation; the canonical state.
struct CartesianModel {
    using Field = MagnetizationField;
    static constexpr std::size_t components = 3;

    LLGParams params;

    static std::span<double> flat(Field& f) { return f.flat(); }
    static std::span<const double> flat(const Field& f) { return f.flat(); }

    void rhs(std::span<const double> y, const RadialMesh& mesh, const SpatialOperators& ops,
             std::span<double> out) const
    {
        rhs_3comp(y, mesh, ops, params, out);
    }

    static void project(Field& f) { project_to_sphere_inplace(f); }
    static std::vector<double> density(const Field& f, const RadialMesh& mesh) { return gradient_density(f, mesh); }
    static Field transfer(const Field& f, const RadialMesh& from, const RadialMesh& to)
    {
        return interpolate(f, from, to);
    }
    double energy(const Field& f, const RadialMesh& mesh) const { return llg::energy(f, mesh, params.n()); }
    static double azimuth(const Field& f, const RadialMesh& mesh) { return origin_azimuth(f, mesh); }
    static double outer_azimuth(const Field& f, const RadialMesh& mesh) { return boundary_azimuth(f, mesh); }
    static BubbleFit fit(const Field& f, const RadialMesh& mesh, const BubbleFitConfig& cfg)
    {
        return fit_bubble(f, mesh, cfg);
    }
    /// The exact bubble matching a fit, flattened like the state.
    static std::vector<double> bubble(const Field& f, const RadialMesh& mesh, const BubbleFit& b)
    {
        const double th0 = f.at(0)[2] >= 0.0 ? 0.0 : pi;
        std::vector<double> out(3 * mesh.size());
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            const Vec3 m = euler_to_cartesian(th0 + 2.0 * std::atan(mesh[i] / b.R), b.C);
            std::copy(m.begin(), m.end(), out.begin() + static_cast<std::ptrdiff_t>(3 * i));
        }
        return out;
    }
    bool dissipative() const { return params.beta() > 0.0; }
    double diffusivity() const { return std::hypot(params.alpha(), params.beta()); }
};

/// Scalar radial heat flow for theta; phi is carried along unchanged.
struct RadialModel {
    using Field = EulerField;
    static constexpr std::size_t components = 1;

    int n = 1;

    static std::span<double> flat(Field& f) { return f.theta; }
    static std::span<const double> flat(const Field& f) { return f.theta; }

    void rhs(std::span<const double> y, const RadialMesh& mesh, const SpatialOperators& ops,
             std::span<double> out) const
    {
        rhs_radial(y, mesh, ops, out, n);
    }

    static void project(Field&) {}
    static std::vector<double> density(const Field& f, const RadialMesh& mesh)
    {
        return gradient_density(f.theta, mesh);
    }
    static Field transfer(const Field& f, const RadialMesh& from, const RadialMesh& to)
    {
        return interpolate(f, from, to);
    }
    double energy(const Field& f, const RadialMesh& mesh) const { return energy_radial(f.theta, mesh, n); }
    static double azimuth(const Field& f, const RadialMesh&) { return f.phi.empty() ? 0.0 : f.phi[0]; }
    static double outer_azimuth(const Field& f, const RadialMesh&) { return f.phi.empty() ? 0.0 : f.phi.back(); }
    static BubbleFit fit(const Field& f, const RadialMesh& mesh, const BubbleFitConfig& cfg)
    {
        return fit_bubble(f, mesh, cfg);
    }
    static std::vector<double> bubble(const Field& f, const RadialMesh& mesh, const BubbleFit& b)
    {
        const double sgn = f.theta.size() > 1 && f.theta[1] < f.theta[0] ? -1.0 : 1.0;
        std::vector<double> out(mesh.size());
        for (std::size_t i = 0; i < mesh.size(); ++i) out[i] = f.theta[0] + sgn * 2.0 * std::atan(mesh[i] / b.R);
        return out;
    }
    bool dissipative() const { return true; }
    double diffusivity() const { return 1.0; }
};

// ---------------------------------------------------------------------------
// State and configuration
// ---------------------------------------------------------------------------

struct StepFlags {
    long rejected_steps = 0;
    long energy_rejections = 0;   ///< substeps refused because the discrete energy rose
    double remap_energy = 0.0;    ///< accumulated energy change caused by mesh transfer
    double last_rate_norm = 0.0;  ///< max |m_t| at the start of the last accepted step
};

template <class F>
struct SimState {
    F field;
    RadialMesh mesh;
    double t = 0.0;
    double s = 0.0;
    long step_count = 0;
    double ds = 1e-3;  ///< suggested next computational step
    double last_dt = 0.0;
    StepFlags flags;
};

enum class Scheme { rosenbrock, explicit_rk };

struct IntegratorConfig {
    Scheme scheme = Scheme::rosenbrock;
    double ds = 1e-3;  ///< initial computational step
    double ds_max = 1.0;
    double rtol = 1e-4;
    double atol = 1e-6;
    double cfl = 0.4;  ///< explicit scheme only: dt <= cfl * min(dr)^2 / beta_eff
    int max_halvings = 20;
    double max_growth = 2.0;
    double energy_tol = 1e-6;  ///< dissipation check: E_new <= E_old + energy_tol * (1 + |E_old|)
    bool check_energy = true;
    bool remesh = true;
    /// Subtract the discrete residual of the fitted exact bubble, so that the
    /// harmonic-map family is stationary for the discrete operator too.
    bool well_balanced = true;
    BubbleFitConfig balance_fit;
    MeshConfig mesh;
};

/// Mesh adapted to analytic initial data: repeated relaxation with the data
/// re-sampled on every intermediate mesh.
template <class Model, class Sampler>
RadialMesh adapt_initial_mesh(const Model& model, Sampler&& sample, const MeshConfig& cfg, int iterations = 40,
                              double ds = 1.0)
{
    RadialMesh mesh = RadialMesh::uniform(cfg.n_nodes);
    for (int k = 0; k < iterations; ++k) {
        const auto field = sample(mesh);
        const auto mon = monitor_from_density(model.density(field, mesh), mesh, cfg);
        mesh = move_mesh(mesh, mon, ds, cfg.tau_mm);
    }
    return mesh;
}

template <class Model, class Sampler>
SimState<typename Model::Field> make_state(const Model& model, Sampler&& sample, const IntegratorConfig& cfg,
                                           bool adapt = true)
{
    RadialMesh mesh = adapt ? adapt_initial_mesh(model, sample, cfg.mesh) : RadialMesh::uniform(cfg.mesh.n_nodes);
    SimState<typename Model::Field> st{sample(mesh), mesh};
    st.ds = cfg.ds;
    return st;
}

// ---------------------------------------------------------------------------
// Stepper
// ---------------------------------------------------------------------------

template <class Model>
class Integrator {
public:
    using Field = typename Model::Field;
    using State = SimState<Field>;
    static constexpr std::size_t K = Model::components;
    static constexpr std::size_t bw = 2 * K - 1;  // half bandwidth of a three-node stencil

    Integrator(Model model, IntegratorConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg)) {}

    const Model& model() const { return model_; }
    const IntegratorConfig& config() const { return cfg_; }

    /// Advances one accepted step starting from computational step ds. When
    /// t_limit is given the step is shortened so that t does not pass it.
    State step(const State& st, double ds, std::optional<double> t_limit = std::nullopt) const
    {
        if (!(ds > 0.0)) throw PreconditionError("step: ds must be positive");
        const RadialMesh& mesh = st.mesh;
        const SpatialOperators ops(mesh);
        const std::size_t n = mesh.size() * K;
        const bool implicit = cfg_.scheme == Scheme::rosenbrock;

        std::vector<double> y(Model::flat(st.field).begin(), Model::flat(st.field).end());
        const Balance bal = balance(st.field, mesh, ops);
        const Balance& corr = bal;
        std::vector<double> f0(n), jac;
        rhs(y, mesh, ops, corr, f0, false);
        double rate_norm = 0.0;
        for (double x : f0) rate_norm = std::max(rate_norm, std::abs(x));
        if (implicit) {
            jac.assign(n * (2 * bw + 1), 0.0);
            jacobian(y, f0, mesh, ops, corr, jac);
        }

        const double mmax = monitor_from_density(model_.density(st.field, mesh), mesh, cfg_.mesh).max();
        const bool check = cfg_.check_energy && model_.dissipative();
        const double e_old = check ? model_.energy(st.field, mesh) : 0.0;

        StepFlags flags = st.flags;
        bool shortened = false;
        if (!implicit) {
            const double cap = cfg_.cfl * mesh.min_spacing() * mesh.min_spacing() / model_.diffusivity() * mmax;
            if (ds > cap) {
                ds = cap;
                shortened = true;
            }
        }
        if (t_limit && *t_limit > st.t && (*t_limit - st.t) * mmax < ds) {
            ds = (*t_limit - st.t) * mmax;
            shortened = true;
        }

        bool energy_fail = false;
        for (int attempt = 0; attempt <= cfg_.max_halvings; ++attempt) {
            const double dt = ds / mmax;
            std::vector<double> ynew;
            const double err = implicit ? rosenbrock(y, f0, jac, mesh, ops, corr, dt, ynew)
                                        : bogacki_shampine(y, f0, mesh, ops, corr, dt, ynew);
            if (err <= 1.0) {
                Field f = st.field;
                auto fl = Model::flat(f);
                std::copy(ynew.begin(), ynew.end(), fl.begin());
                bool ok = true;
                try {
                    Model::project(f);
                } catch (const DegenerateStateError&) {
                    ok = false;
                }
                if (ok && check) {
                    const double e_new = model_.energy(f, mesh);
                    if (e_new > e_old + cfg_.energy_tol * (1.0 + std::abs(e_old))) {
                        ++flags.energy_rejections;
                        energy_fail = true;
                        ok = false;
                    }
                }
                if (ok) {
                    try {
                        State out = finish(st, std::move(f), ds, dt, bal.fit);
                        out.flags.rejected_steps = flags.rejected_steps;
                        out.flags.energy_rejections = flags.energy_rejections;
                        out.flags.last_rate_norm = rate_norm;
                        double fac = err > 0.0 ? 0.9 * std::pow(err, -1.0 / 3.0) : cfg_.max_growth;
                        fac = std::clamp(fac, 0.2, attempt > 0 ? 1.0 : cfg_.max_growth);
                        out.ds = std::min(cfg_.ds_max, (shortened ? std::max(ds, st.ds) : ds) * fac);
                        return out;
                    } catch (const MeshTanglingError&) {
                    }
                }
            }
            ++flags.rejected_steps;
            ds *= 0.5;
        }
        if (energy_fail)
            throw SolverError("step: discrete energy increase beyond tolerance persisted through " +
                              std::to_string(cfg_.max_halvings) + " halvings at t = " + std::to_string(st.t));
        throw SolverError("step: error control failed after " + std::to_string(cfg_.max_halvings) +
                          " halvings at t = " + std::to_string(st.t) + " (likely unresolved blowup)");
    }

private:
    struct Balance {
        std::vector<double> corr;
        std::optional<BubbleFit> fit;
        std::optional<Field> like;  ///< shape for rebuilding a field from stage values
        // Rank-one part of the Jacobian of the tracked correction: d corr/dy ~ u v^T
        // with u = d corr/dR and v the gradient of the fitted R.
        std::vector<double> u, v;
    };

    /// Discrete residual of the fitted bubble on this mesh; empty when there
    /// is no core or the fit fails.
    Balance balance(const Field& f, const RadialMesh& mesh, const SpatialOperators& ops) const
    {
        if (!cfg_.well_balanced) return {};
        const auto g = model_.density(f, mesh);
        if (*std::max_element(g.begin(), g.end()) < cfg_.balance_fit.min_grad) return {};
        Balance out;
        try {
            out.fit = Model::fit(f, mesh, cfg_.balance_fit);
        } catch (const Error&) {
            return {};
        }
        out.like = f;
        out.corr = bubble_residual(f, mesh, ops, *out.fit);

        const double R = out.fit->R, eps = 1e-5;
        BubbleFit lo = *out.fit, hi = *out.fit;
        lo.R = R * (1.0 - eps);
        hi.R = R * (1.0 + eps);
        const auto cl = bubble_residual(f, mesh, ops, lo), ch = bubble_residual(f, mesh, ops, hi);
        const auto bl = Model::bubble(f, mesh, lo), bh = Model::bubble(f, mesh, hi);
        const std::size_t last = detail::window_end(mesh, cfg_.balance_fit.window * R);
        out.u.resize(cl.size());
        out.v.assign(cl.size(), 0.0);
        double norm = 0.0;
        for (std::size_t i = 0; i < cl.size(); ++i) {
            out.u[i] = (ch[i] - cl[i]) / (2.0 * eps * R);
            if (i >= K && i < K * (last + 1)) {
                out.v[i] = (bh[i] - bl[i]) / (2.0 * eps * R);
                norm += out.v[i] * out.v[i];
            }
        }
        if (norm > 0.0)
            for (double& x : out.v) x /= norm;
        else
            out.u.clear();
        return out;
    }

    std::vector<double> bubble_residual(const Field& f, const RadialMesh& mesh, const SpatialOperators& ops,
                                        const BubbleFit& b) const
    {
        const auto yb = Model::bubble(f, mesh, b);
        std::vector<double> out(yb.size());
        model_.rhs(yb, mesh, ops, out);
        return out;
    }

    /// Mesh transfer. With a fitted core only the difference to the bubble
    /// is interpolated; the bubble itself is evaluated on the new nodes, so
    /// the core is not eroded a little at every step.
    static Field transfer(const Field& f, const RadialMesh& from, const RadialMesh& to,
                          const std::optional<BubbleFit>& fit)
    {
        Field out = Model::transfer(f, from, to);
        if (!fit || from == to) return out;
        const auto src = Model::flat(f);
        const auto b_from = Model::bubble(f, from, *fit);
        const auto b_to = Model::bubble(f, to, *fit);
        std::vector<double> diff(src.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = src[i] - b_from[i];
        auto dst = Model::flat(out);
        for (std::size_t c = 0; c < K; ++c) {
            const auto d = interpolate(diff, from, to, K, c);
            for (std::size_t i = 0; i < to.size(); ++i) dst[K * i + c] = b_to[K * i + c] + d[i];
        }
        Model::project(out);
        return out;
    }

    void rhs(std::span<const double> y, const RadialMesh& mesh, const SpatialOperators& ops,
             const Balance& bal, std::span<double> out, bool track = true) const
    {
        model_.rhs(y, mesh, ops, out);
        if (bal.corr.empty()) return;
        // The bubble is refitted to each stage. A correction frozen at the
        // step start pins R inside a stiff implicit step.
        std::vector<double> moved;
        if (track) {
            Field f = *bal.like;
            auto fl = Model::flat(f);
            std::copy(y.begin(), y.end(), fl.begin());
            try {
                moved = bubble_residual(f, mesh, ops, Model::fit(f, mesh, cfg_.balance_fit));
            } catch (const Error&) {
            }
        }
        const auto& corr = moved.empty() ? bal.corr : moved;
        for (std::size_t i = 0; i < corr.size(); ++i) out[i] -= corr[i];
    }

    /// Finite-difference Jacobian of the banded right-hand side, using 3K
    /// colour groups (nodes congruent mod 3, one component at a time).
    void jacobian(const std::vector<double>& y, const std::vector<double>& f0, const RadialMesh& mesh,
                  const SpatialOperators& ops, const Balance& corr, std::vector<double>& jac) const
    {
        const std::size_t nodes = mesh.size();
        const std::size_t n = nodes * K;
        std::vector<double> yp(y), fp(n);
        for (std::size_t cnode = 0; cnode < 3; ++cnode) {
            for (std::size_t comp = 0; comp < K; ++comp) {
                yp = y;
                for (std::size_t k = cnode; k < nodes; k += 3) {
                    const std::size_t j = k * K + comp;
                    yp[j] += 1e-7 * std::max(1.0, std::abs(y[j]));
                }
                rhs(yp, mesh, ops, corr, fp, false);
                for (std::size_t k = cnode; k < nodes; k += 3) {
                    const std::size_t j = k * K + comp;
                    const double eps = yp[j] - y[j];
                    const std::size_t lo = (k == 0 ? 0 : k - 1) * K;
                    const std::size_t hi = std::min(nodes, k + 2) * K;
                    for (std::size_t i = lo; i < hi; ++i)
                        jac[i * (2 * bw + 1) + (j + bw - i)] = (fp[i] - f0[i]) / eps;
                }
            }
        }
    }

    /// Rosenbrock 2(3) pair of Shampine & Reichelt (L-stable second-order
    /// solution, third-order error estimate). Returns the scaled error norm.
    double rosenbrock(const std::vector<double>& y, const std::vector<double>& f0, const std::vector<double>& jac,
                      const RadialMesh& mesh, const SpatialOperators& ops, const Balance& corr, double h,
                      std::vector<double>& ynew) const
    {
        const std::size_t n = y.size();
        const double d = 1.0 / (2.0 + std::sqrt(2.0));
        const double e32 = 6.0 + std::sqrt(2.0);

        BandedLU W(n, bw, bw);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t jlo = i >= bw ? i - bw : 0;
            const std::size_t jhi = std::min(n - 1, i + bw);
            for (std::size_t j = jlo; j <= jhi; ++j)
                W(i, j) = (i == j ? 1.0 : 0.0) - h * d * jac[i * (2 * bw + 1) + (j + bw - i)];
        }
        if (!W.factor()) return std::numeric_limits<double>::infinity();

        // Sherman-Morrison for W + h d u v^T, the matrix of the corrected rhs.
        std::vector<double> wu;
        double denom = 1.0;
        if (!corr.u.empty()) {
            wu = corr.u;
            W.solve(wu);
            denom = 1.0 + h * d * std::inner_product(corr.v.begin(), corr.v.end(), wu.begin(), 0.0);
            if (!(std::abs(denom) > 1e-12)) wu.clear();
        }
        auto solve = [&](std::vector<double>& x) {
            W.solve(x);
            if (wu.empty()) return;
            const double c = h * d * std::inner_product(corr.v.begin(), corr.v.end(), x.begin(), 0.0) / denom;
            for (std::size_t i = 0; i < n; ++i) x[i] -= c * wu[i];
        };

        std::vector<double> k1(f0), k2(n), k3(n), f1(n), f2(n), tmp(n);
        solve(k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, mesh, ops, corr, f1);
        for (std::size_t i = 0; i < n; ++i) k2[i] = f1[i] - k1[i];
        solve(k2);
        for (std::size_t i = 0; i < n; ++i) k2[i] += k1[i];
        ynew.resize(n);
        for (std::size_t i = 0; i < n; ++i) ynew[i] = y[i] + h * k2[i];
        rhs(ynew, mesh, ops, corr, f2);
        for (std::size_t i = 0; i < n; ++i) k3[i] = f2[i] - e32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i]);
        solve(k3);

        // Error estimate filtered through W^-1 so stiff modes excited by the
        // remesh transfer do not force parabolic step sizes.
        std::vector<double> est(n);
        for (std::size_t i = 0; i < n; ++i) est[i] = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
        solve(est);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = est[i];
            const double sc = cfg_.atol + cfg_.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double q = std::abs(e) / sc;
            if (!std::isfinite(q) || !std::isfinite(ynew[i])) return std::numeric_limits<double>::infinity();
            err = std::max(err, q);
        }
        return err;
    }

    /// Bogacki-Shampine 3(2) pair (FSAL stage not reused). Returns the scaled
    /// error norm.
    double bogacki_shampine(const std::vector<double>& y, const std::vector<double>& f0, const RadialMesh& mesh,
                            const SpatialOperators& ops, const Balance& corr, double h,
                            std::vector<double>& ynew) const
    {
        const std::size_t n = y.size();
        std::vector<double> k2(n), k3(n), k4(n), tmp(n);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * f0[i];
        rhs(tmp, mesh, ops, corr, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.75 * h * k2[i];
        rhs(tmp, mesh, ops, corr, k3);
        ynew.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (2.0 / 9.0 * f0[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i]);
        rhs(ynew, mesh, ops, corr, k4);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (-5.0 / 72.0 * f0[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 1.0 / 8.0 * k4[i]);
            const double sc = cfg_.atol + cfg_.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double q = std::abs(e) / sc;
            if (!std::isfinite(q) || !std::isfinite(ynew[i])) return std::numeric_limits<double>::infinity();
            err = std::max(err, q);
        }
        return err;
    }

    State finish(const State& st, Field f, double ds, double dt, const std::optional<BubbleFit>& fit) const
    {
        State out;
        out.flags = st.flags;
        if (cfg_.remesh) {
            const auto mon = monitor_from_density(model_.density(f, st.mesh), st.mesh, cfg_.mesh);
            RadialMesh moved = move_mesh(st.mesh, mon, ds, cfg_.mesh.tau_mm);
            out.field = transfer(f, st.mesh, moved, fit);
            out.mesh = std::move(moved);
            out.flags.remap_energy += model_.energy(out.field, out.mesh) - model_.energy(f, st.mesh);
        } else {
            out.field = std::move(f);
            out.mesh = st.mesh;
        }
        out.t = st.t + dt;
        out.s = st.s + ds;
        out.step_count = st.step_count + 1;
        out.last_dt = dt;
        return out;
    }

    Model model_;
    IntegratorConfig cfg_;
};

template <class Model>
SimState<typename Model::Field> step(const SimState<typename Model::Field>& st, const Model& model,
                                     const IntegratorConfig& cfg, double ds)
{
    return Integrator<Model>(model, cfg).step(st, ds);
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct StopSpec {
    std::optional<double> grad_inf;
    std::optional<double> t_max;
    std::optional<long> max_steps;
    std::optional<double> eq_tol;  ///< stop when max |m_t| falls below this

    bool any() const { return grad_inf || t_max || max_steps || eq_tol; }
};

enum class Termination { GradientThreshold, TimeLimit, StepLimit, Equilibrium, SolverFailure };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::GradientThreshold: return "gradient-threshold";
    case Termination::TimeLimit: return "time-limit";
    case Termination::StepLimit: return "step-limit";
    case Termination::Equilibrium: return "equilibrium";
    case Termination::SolverFailure: return "solver-failure";
    }
    return "unknown";
}

struct Sample {
    long step = 0;
    double t = 0.0;
    double dt = 0.0;
    double s = 0.0;
    double grad_inf = 0.0;
    double energy = 0.0;
    double azimuth = 0.0;        ///< azimuth at the origin, the limit of phi inside the bubble
    double outer_azimuth = 0.0;  ///< azimuth of the remote solution at r = 1
    std::optional<double> R_fit;
    std::optional<double> C_fit;
};

template <class F>
struct RunResult {
    std::vector<Sample> samples;
    Termination reason = Termination::StepLimit;
    SimState<F> final_state;
    std::string message;
};

struct RunOptions {
    long sample_every = 1;
    bool fit_bubbles = true;
    BubbleFitConfig fit;
};

template <class Model>
Sample make_sample(const Model& model, const SimState<typename Model::Field>& st, const RunOptions& opt)
{
    Sample s;
    s.step = st.step_count;
    s.t = st.t;
    s.dt = st.last_dt;
    s.s = st.s;
    const auto g = model.density(st.field, st.mesh);
    s.grad_inf = *std::max_element(g.begin(), g.end());
    s.energy = model.energy(st.field, st.mesh);
    s.azimuth = model.azimuth(st.field, st.mesh);
    s.outer_azimuth = model.outer_azimuth(st.field, st.mesh);
    if (opt.fit_bubbles && s.grad_inf >= opt.fit.min_grad) {
        try {
            const auto b = model.fit(st.field, st.mesh, opt.fit);
            s.R_fit = b.R;
            s.C_fit = b.C;
        } catch (const Error&) {
        }
    }
    return s;
}

/// max |m_t| on the current state.
template <class Model>
double rate_norm(const Model& model, const SimState<typename Model::Field>& st)
{
    const auto y = Model::flat(st.field);
    std::vector<double> f(y.size());
    model.rhs(y, st.mesh, SpatialOperators(st.mesh), f);
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
}

template <class Model>
using Observer = std::function<void(const SimState<typename Model::Field>&, const Sample&)>;

template <class Model>
RunResult<typename Model::Field> run_until(SimState<typename Model::Field> st, const Model& model,
                                           const StopSpec& stop, const IntegratorConfig& cfg,
                                           const RunOptions& opt = {}, const Observer<Model>& observer = {})
{
    if (!stop.any()) throw PreconditionError("run_until: StopSpec needs at least one criterion");
    const Integrator<Model> integ(model, cfg);
    RunResult<typename Model::Field> res;

    auto record = [&](bool force) {
        if (force || st.step_count % std::max<long>(1, opt.sample_every) == 0) {
            res.samples.push_back(make_sample(model, st, opt));
            if (observer) observer(st, res.samples.back());
            return true;
        }
        return false;
    };
    record(true);

    for (;;) {
        const Sample& last = res.samples.back();
        const bool fresh = last.step == st.step_count;
        const double grad = fresh ? last.grad_inf : [&] {
            const auto g = model.density(st.field, st.mesh);
            return *std::max_element(g.begin(), g.end());
        }();
        if (stop.grad_inf && grad >= *stop.grad_inf) {
            res.reason = Termination::GradientThreshold;
            break;
        }
        if (stop.eq_tol && st.step_count > 0 && rate_norm(model, st) < *stop.eq_tol) {
            res.reason = Termination::Equilibrium;
            break;
        }
        if (stop.t_max && st.t >= *stop.t_max * (1.0 - 1e-14)) {
            res.reason = Termination::TimeLimit;
            break;
        }
        if (stop.max_steps && st.step_count >= *stop.max_steps) {
            res.reason = Termination::StepLimit;
            break;
        }
        try {
            st = integ.step(st, st.ds, stop.t_max);
        } catch (const SolverError& e) {
            res.reason = Termination::SolverFailure;
            res.message = e.what();
            break;
        }
        record(false);
    }
    if (res.samples.back().step != st.step_count) record(true);
    res.final_state = std::move(st);
    return res;
}

} // namespace llg
