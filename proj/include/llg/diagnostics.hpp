#pragma once

// Analysis of trajectories: blowup-rate fits, outcome classification,
// rotation tracking, the inner/outer angle and continuation past blowup.

#include "integrator.hpp"

namespace llg {

// ---------------------------------------------------------------------------
// Blowup rate
// ---------------------------------------------------------------------------

enum class RateModel {
    log_corrected,  ///< R = kappa (T - t) / |ln(T - t)|^2
    similarity,     ///< R = kappa sqrt(T - t)
    linear,         ///< R = kappa (T - t)
};

inline const char* to_string(RateModel m)
{
    switch (m) {
    case RateModel::log_corrected: return "log-corrected";
    case RateModel::similarity: return "similarity";
    case RateModel::linear: return "linear";
    }
    return "unknown";
}

struct RatePoint {
    double t = 0.0;
    double R = 0.0;
};

struct RateFit {
    RateModel model = RateModel::log_corrected;
    double kappa = 0.0;
    double T = 0.0;
    double t_lo = 0.0, t_hi = 0.0;
    double residual = 0.0;  ///< rms of log R - log model
    std::size_t samples = 0;
};

struct RateFitConfig {
    std::size_t min_samples = 20;
    double min_decades = 2.0;
    double monotone_tol = 1e-9;  ///< relative increase of R tolerated between samples
    int scan_points = 200;
};

namespace detail {

/// log of the model with kappa = 1, or NaN outside its domain.
inline double rate_shape(RateModel m, double d)
{
    if (!(d > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double l = std::log(d);
    switch (m) {
    case RateModel::log_corrected:
        if (!(d < 1.0)) return std::numeric_limits<double>::quiet_NaN();
        return l - 2.0 * std::log(std::abs(l));
    case RateModel::similarity: return 0.5 * l;
    case RateModel::linear: return l;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace detail

/// Least squares of log R against the model over (kappa, T). For fixed T the
/// optimal log kappa is the mean residual, so only T is searched: a log-spaced
/// scan of T - t_hi followed by Brent refinement.
inline RateFit fit_rate(std::span<const RatePoint> pts, RateModel model = RateModel::log_corrected,
                        const RateFitConfig& cfg = {})
{
    if (pts.size() < cfg.min_samples) throw PreconditionError("fit_rate: too few samples");
    double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (!(pts[k].R > 0.0)) throw PreconditionError("fit_rate: R must be positive");
        if (k > 0 && !(pts[k].t > pts[k - 1].t)) throw PreconditionError("fit_rate: times must increase");
        if (k > 0 && pts[k].R > pts[k - 1].R * (1.0 + cfg.monotone_tol))
            throw PreconditionError("fit_rate: R series is not monotone");
        rmax = std::max(rmax, pts[k].R);
        rmin = std::min(rmin, pts[k].R);
    }
    if (std::log10(rmax / rmin) < cfg.min_decades) throw PreconditionError("fit_rate: R spans too few decades");

    const double t_lo = pts.front().t, t_hi = pts.back().t;
    const double span = t_hi - t_lo;

    auto eval = [&](double logd, double* logk) {
        const double T = t_hi + std::exp(logd);
        double mean = 0.0;
        for (const auto& p : pts) {
            const double g = detail::rate_shape(model, T - p.t);
            if (!std::isfinite(g)) return std::numeric_limits<double>::infinity();
            mean += std::log(p.R) - g;
        }
        mean /= static_cast<double>(pts.size());
        double ss = 0.0;
        for (const auto& p : pts) {
            const double e = std::log(p.R) - detail::rate_shape(model, T - p.t) - mean;
            ss += e * e;
        }
        if (logk) *logk = mean;
        return std::sqrt(ss / static_cast<double>(pts.size()));
    };

    const double lo = std::log(std::max(span, 1e-300) * 1e-12);
    const double hi = std::log(std::max(span, 1e-300) * 10.0);
    const int n = std::max(cfg.scan_points, 10);
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) {
        const double v = eval(lo + (hi - lo) * k / n, nullptr);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    if (!std::isfinite(best_val)) throw FitError("fit_rate: model undefined on the data window");
    const double a = lo + (hi - lo) * std::max(best - 1, 0) / n;
    const double b = lo + (hi - lo) * std::min(best + 1, n) / n;
    const auto opt = boost::math::tools::brent_find_minima([&](double x) { return eval(x, nullptr); }, a, b, 52);

    RateFit fit;
    fit.model = model;
    double logk = 0.0;
    fit.residual = eval(opt.first, &logk);
    fit.kappa = std::exp(logk);
    fit.T = t_hi + std::exp(opt.first);
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.samples = pts.size();
    return fit;
}

/// Trailing window of a trajectory for rate fitting: fitted samples with
/// R <= rel * (first fitted R).
inline std::vector<RatePoint> rate_window(std::span<const Sample> samples, double rel = 1e-2)
{
    std::optional<double> R0;
    std::vector<RatePoint> out;
    for (const auto& s : samples) {
        if (!s.R_fit) continue;
        if (!R0) R0 = *s.R_fit;
        if (*s.R_fit <= rel * *R0 && (out.empty() || s.t > out.back().t)) out.push_back({s.t, *s.R_fit});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rotation and outcome
// ---------------------------------------------------------------------------

/// Net rotation of the bubble relative to the remote solution: the
/// accumulated, wrapped increments of (azimuth - outer_azimuth). Measuring
/// against the remote azimuth removes rigid precession of the whole map.
inline double relative_rotation(std::span<const Sample> samples)
{
    double total = 0.0;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const double a = samples[k].azimuth - samples[k].outer_azimuth;
        const double b = samples[k - 1].azimuth - samples[k - 1].outer_azimuth;
        total += wrap_angle(a - b);
    }
    return total;
}

struct RotationMeasure {
    double delta = 0.0;
    std::size_t fitted = 0;  ///< samples carrying a bubble fit
    bool gaps = false;       ///< some samples inside the fitted episode lack a fit
};

/// Rotation over a run that went through a bubble episode. Fitted samples
/// certify the episode; the angle itself is tracked on every sample so that
/// gaps in the fits are bridged.
inline RotationMeasure rotation_angle(std::span<const Sample> samples, std::size_t min_fits = 10)
{
    RotationMeasure m;
    std::optional<std::size_t> first, last;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (!samples[k].C_fit) continue;
        ++m.fitted;
        if (!first) first = k;
        last = k;
    }
    if (m.fitted < min_fits) throw PreconditionError("rotation_angle: too few samples with a bubble fit");
    m.gaps = (*last - *first + 1) != m.fitted;
    m.delta = relative_rotation(samples);
    return m;
}

enum class OutcomeTag { Blowup, DecayPlus, DecayMinus, Undetermined };

inline const char* to_string(OutcomeTag t)
{
    switch (t) {
    case OutcomeTag::Blowup: return "Blowup";
    case OutcomeTag::DecayPlus: return "DecayPlus";
    case OutcomeTag::DecayMinus: return "DecayMinus";
    case OutcomeTag::Undetermined: return "Undetermined";
    }
    return "unknown";
}

struct Outcome {
    OutcomeTag tag = OutcomeTag::Undetermined;
    double peak_grad = 0.0;
    double rotation = 0.0;
    Termination reason = Termination::StepLimit;
};

struct ClassifyConfig {
    double min_rotation = pi / 4.0;  ///< below this |rotation| a decay is Undetermined
};

inline Outcome classify(std::span<const Sample> samples, Termination reason, const ClassifyConfig& cfg = {})
{
    Outcome o;
    o.reason = reason;
    for (const auto& s : samples) o.peak_grad = std::max(o.peak_grad, s.grad_inf);
    o.rotation = relative_rotation(samples);
    if (reason == Termination::GradientThreshold)
        o.tag = OutcomeTag::Blowup;
    else if (reason == Termination::Equilibrium && std::abs(o.rotation) >= cfg.min_rotation)
        o.tag = o.rotation > 0.0 ? OutcomeTag::DecayPlus : OutcomeTag::DecayMinus;
    return o;
}

// ---------------------------------------------------------------------------
// Inner/outer angle
// ---------------------------------------------------------------------------

/// pi - arctan(alpha / beta); pi/2 when beta = 0.
inline double predicted_angle(const LLGParams& p)
{
    if (p.beta() > 0.0) return pi - std::atan(p.alpha() / p.beta());
    return 0.5 * pi;
}

struct AngleConfig {
    double outer_lo = 0.1;  ///< remote window in r
    double outer_hi = 0.5;
};

struct AngleMeasure {
    double inner = 0.0;  ///< bubble azimuth
    double outer = 0.0;  ///< arg z on the remote scale
    double difference = 0.0;  ///< inner - outer in (-pi, pi]
};

/// Azimuth difference between the bubble and the remote solution, both read
/// as arg z of the stereographic coordinate at the south pole.
inline AngleMeasure inner_outer_angle(const MagnetizationField& f, const RadialMesh& mesh, const BubbleFit& fit,
                                      const AngleConfig& cfg = {})
{
    double sc = 0.0, ss = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (mesh[i] < cfg.outer_lo || mesh[i] > cfg.outer_hi) continue;
        const Vec3 m = f.at(i);
        const double h = std::hypot(m[0], m[1]);
        if (h == 0.0) continue;
        sc += m[0] / h;
        ss += m[1] / h;
        ++count;
    }
    if (count == 0 || std::hypot(sc, ss) == 0.0) throw FitError("inner_outer_angle: no usable nodes in the remote window");
    AngleMeasure a;
    a.inner = fit.C;
    a.outer = std::atan2(ss, sc);
    a.difference = wrap_angle(a.inner - a.outer);
    return a;
}

// ---------------------------------------------------------------------------
// Continuation past blowup
// ---------------------------------------------------------------------------

struct ContinuationConfig {
    double blend_lo = 5.0;  ///< in units of R: full replacement inside
    double blend_hi = 10.0;  ///< untouched outside
};

struct ContinuationResult {
    MagnetizationField field;
    EulerField euler;           ///< continued state, theta unwrapped
    double theta0_before = 0.0;
    double theta0_after = 0.0;
    double phi_bubble = 0.0;    ///< principal azimuth of the new bubble
    double energy_before = 0.0; ///< at termination, bubble attached
    double energy_at_T = 0.0;   ///< bubble removed, e(T)
    double energy_after = 0.0;  ///< reversed bubble re-attached
};

namespace detail {

inline double smoothstep_weight(double r, double a, double b)
{
    if (r <= a) return 1.0;
    if (r >= b) return 0.0;
    const double x = (r - a) / (b - a);
    return 1.0 - x * x * (3.0 - 2.0 * x);
}

} // namespace detail

/// Replaces the bubble 2 arctan(r/R) at the origin by the reversed bubble
/// 2 pi - 2 arctan(r/R), blended into the outer solution with a C^1 weight.
/// In the unwrapped picture theta(0) moves by 2 pi; on the sphere this is the
/// same bubble rotated over pi, so the principal azimuth becomes C + pi.
inline ContinuationResult continue_past_blowup(const EulerField& e, const RadialMesh& mesh, const BubbleFit& fit,
                                               int n = 1, const ContinuationConfig& cfg = {})
{
    if (!(fit.R > 0.0)) throw PreconditionError("continue_past_blowup: needs a bubble fit");
    if (e.size() != mesh.size() || e.size() < 2) throw PreconditionError("continue_past_blowup: size mismatch");
    if (!(cfg.blend_hi > cfg.blend_lo && cfg.blend_lo > 0.0))
        throw PreconditionError("continue_past_blowup: bad blend window");
    const double sgn = e.theta[1] < e.theta[0] ? -1.0 : 1.0;
    EulerField removed = e, next = e;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double w = detail::smoothstep_weight(mesh[i], cfg.blend_lo * fit.R, cfg.blend_hi * fit.R);
        const double a = 2.0 * std::atan(mesh[i] / fit.R);
        removed.theta[i] += w * sgn * (pi - a);
        next.theta[i] += w * sgn * (2.0 * pi - 2.0 * a);
    }
    ContinuationResult res;
    res.theta0_before = e.theta[0];
    res.theta0_after = next.theta[0];
    res.field = project_to_sphere(to_cartesian(next));
    res.euler = std::move(next);
    res.phi_bubble = wrap_angle(fit.C + pi);
    res.energy_before = energy(e, mesh, n);
    res.energy_at_T = energy(removed, mesh, n);
    res.energy_after = energy(res.euler, mesh, n);
    return res;
}

inline ContinuationResult continue_past_blowup(const MagnetizationField& f, const RadialMesh& mesh,
                                               const BubbleFit& fit, int n = 1, const ContinuationConfig& cfg = {})
{
    return continue_past_blowup(unwrap_euler(f), mesh, fit, n, cfg);
}

// ---------------------------------------------------------------------------
// Renormalized energy
// ---------------------------------------------------------------------------

struct EnergyPoint {
    double t = 0.0;
    double e = 0.0;
};

struct RenormalizedEnergy {
    std::vector<EnergyPoint> series;  ///< e with the value at T replaced by e(T) + 4 pi
    double jump = 0.0;                ///< e(T-) - e(T)
    bool monotone = false;
    bool continuous = false;          ///< |e(T-) - (e(T) + 4 pi)| <= tol
    bool pass() const { return monotone && continuous; }
};

/// e(T) is the first sample at or after T (the energy with the bubble gone);
/// e(T-) the last sample before it.
inline RenormalizedEnergy renormalized_energy(std::span<const EnergyPoint> e, double T, double tol = 1e-3 * 4.0 * pi)
{
    auto right = std::find_if(e.begin(), e.end(), [T](const EnergyPoint& p) { return p.t >= T; });
    if (right == e.begin() || right == e.end())
        throw PreconditionError("renormalized_energy: need samples on both sides of T");
    for (std::size_t k = 1; k < e.size(); ++k)
        if (!(e[k].t > e[k - 1].t)) throw PreconditionError("renormalized_energy: times must increase");
    RenormalizedEnergy out;
    const double eL = std::prev(right)->e;
    const double eT = right->e + 4.0 * pi;
    out.jump = eL - right->e;
    out.series.assign(e.begin(), right);
    out.series.push_back({T, eT});
    out.series.insert(out.series.end(), right->t == T ? std::next(right) : right, e.end());
    out.monotone = true;
    for (std::size_t k = 1; k < out.series.size(); ++k)
        if (out.series[k].e > out.series[k - 1].e + tol) out.monotone = false;
    out.continuous = std::abs(eL - eT) <= tol;
    return out;
}

} // namespace llg
