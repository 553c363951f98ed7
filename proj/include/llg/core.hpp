#pragma once

// State representations, parameters and coordinate conversions shared by the
// solver, the diagnostics and the harness.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace llg {

inline constexpr double pi = std::numbers::pi;

using Vec3 = std::array<double, 3>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violated a documented precondition (maps to CLI exit code 2).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class NormViolationError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class InvalidMeshError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class ResolutionError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class FitError : public Error {
public:
    using Error::Error;
};

/// Numerical failure of a simulation (maps to CLI exit code 3).
class SolverError : public Error {
public:
    using Error::Error;
};

class DegenerateStateError : public SolverError {
public:
    using SolverError::SolverError;
};

class MeshTanglingError : public SolverError {
public:
    using SolverError::SolverError;
};

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a)
{
    a = std::remainder(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Point on the heat-flow / Schroedinger family. (alpha, beta) are rescaled to
/// the unit circle on construction.
class LLGParams {
public:
    LLGParams() = default;

    LLGParams(double alpha, double beta, int n = 1) : n_(n)
    {
        if (!std::isfinite(alpha) || !std::isfinite(beta))
            throw PreconditionError("LLGParams: non-finite coefficient");
        if (beta < 0.0) throw PreconditionError("LLGParams: beta must be non-negative");
        if (n < 1) throw PreconditionError("LLGParams: equivariance index must be >= 1");
        const double s = std::hypot(alpha, beta);
        if (s == 0.0) throw PreconditionError("LLGParams: alpha and beta both zero");
        alpha_ = alpha / s;
        beta_ = beta / s;
    }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    int n() const { return n_; }

    static LLGParams heat_flow(int n = 1) { return {0.0, 1.0, n}; }
    static LLGParams schroedinger(int n = 1) { return {1.0, 0.0, n}; }

private:
    double alpha_ = 0.0;
    double beta_ = 1.0;
    int n_ = 1;
};

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

/// (u, v, w) samples per mesh node, stored interleaved so that the solver can
/// work on a flat span of length 3N.
class MagnetizationField {
public:
    MagnetizationField() = default;
    explicit MagnetizationField(std::size_t n) : data_(3 * n, 0.0) {}

    static MagnetizationField constant(std::size_t n, const Vec3& m)
    {
        MagnetizationField f(n);
        for (std::size_t i = 0; i < n; ++i) f.set(i, m);
        return f;
    }

    std::size_t size() const { return data_.size() / 3; }

    double& u(std::size_t i) { return data_[3 * i]; }
    double& v(std::size_t i) { return data_[3 * i + 1]; }
    double& w(std::size_t i) { return data_[3 * i + 2]; }
    double u(std::size_t i) const { return data_[3 * i]; }
    double v(std::size_t i) const { return data_[3 * i + 1]; }
    double w(std::size_t i) const { return data_[3 * i + 2]; }

    Vec3 at(std::size_t i) const { return {u(i), v(i), w(i)}; }
    void set(std::size_t i, const Vec3& m)
    {
        data_[3 * i] = m[0];
        data_[3 * i + 1] = m[1];
        data_[3 * i + 2] = m[2];
    }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool operator==(const MagnetizationField&) const = default;

private:
    std::vector<double> data_;
};

/// Euler angles per node. theta may be stored unwrapped (outside [0, pi]) so
/// that orientation changes such as theta(0) = 2 pi can be represented.
struct EulerField {
    std::vector<double> theta;
    std::vector<double> phi;

    EulerField() = default;
    explicit EulerField(std::size_t n) : theta(n, 0.0), phi(n, 0.0) {}
    EulerField(std::vector<double> th, std::vector<double> ph) : theta(std::move(th)), phi(std::move(ph))
    {
        if (theta.size() != phi.size()) throw PreconditionError("EulerField: theta/phi size mismatch");
    }

    std::size_t size() const { return theta.size(); }
};

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

inline Vec3 euler_to_cartesian(double theta, double phi)
{
    const double s = std::sin(theta);
    return {std::cos(phi) * s, std::sin(phi) * s, std::cos(theta)};
}

/// Principal values: theta in [0, pi], phi in (-pi, pi]; phi = 0 at the poles.
inline std::pair<double, double> cartesian_to_euler(const Vec3& m)
{
    const double nm = norm(m);
    if (!(std::abs(nm - 1.0) <= 1e-9)) throw NormViolationError("cartesian_to_euler: input is not a unit vector");
    const double rho = std::hypot(m[0], m[1]);
    const double theta = std::atan2(rho, m[2]);
    if (rho < 1e-12) return {theta, 0.0};
    double phi = std::atan2(m[1], m[0]);
    if (phi <= -pi) phi = pi;
    return {theta, phi};
}

inline MagnetizationField to_cartesian(const EulerField& e)
{
    MagnetizationField f(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) f.set(i, euler_to_cartesian(e.theta[i], e.phi[i]));
    return f;
}

/// Principal-value conversion node by node.
inline EulerField to_euler(const MagnetizationField& f)
{
    EulerField e(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        Vec3 m = f.at(i);
        const double nm = norm(m);
        for (double& c : m) c /= nm;
        auto [th, ph] = cartesian_to_euler(m);
        e.theta[i] = th;
        e.phi[i] = ph;
    }
    return e;
}

/// Continuous representation along r. Each node picks, among the equivalent
/// representations (theta + 2k pi, phi + 2j pi) and (-theta + 2k pi,
/// phi + pi + 2j pi), the one closest to its left neighbour. Near the poles
/// the azimuth is poorly defined, so phi is held from the previous node there.
inline EulerField unwrap_euler(const MagnetizationField& f, double pole_tol = 1e-9)
{
    EulerField p = to_euler(f);
    EulerField out(p.size());
    if (p.size() == 0) return out;

    // Start at the first node with a defined azimuth so that pole nodes
    // inherit a meaningful phi.
    double prev_phi = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (std::sin(p.theta[i]) > pole_tol) {
            prev_phi = p.phi[i];
            break;
        }
    }
    double prev_theta = p.theta[0];
    out.theta[0] = p.theta[0];
    out.phi[0] = prev_phi;

    for (std::size_t i = 1; i < p.size(); ++i) {
        const double th = p.theta[i];
        const bool pole = std::sin(th) <= pole_tol;
        const double ph = pole ? prev_phi : p.phi[i];

        double best_th = th, best_ph = ph, best_cost = 1e300;
        for (int flip = 0; flip < 2; ++flip) {
            const double th0 = flip ? -th : th;
            const double ph0 = flip ? ph + pi : ph;
            const double th_c = th0 + 2.0 * pi * std::round((prev_theta - th0) / (2.0 * pi));
            const double ph_c = ph0 + 2.0 * pi * std::round((prev_phi - ph0) / (2.0 * pi));
            const double cost = std::abs(th_c - prev_theta) + (pole ? 0.0 : std::abs(ph_c - prev_phi)) +
                                (pole && flip ? 1e-12 : 0.0);
            if (cost < best_cost) {
                best_cost = cost;
                best_th = th_c;
                best_ph = pole ? prev_phi : ph_c;
            }
        }
        out.theta[i] = best_th;
        out.phi[i] = best_ph;
        prev_theta = best_th;
        prev_phi = best_ph;
    }
    return out;
}

/// Normalizes every node. Throws DegenerateStateError on a zero vector.
inline void project_to_sphere_inplace(MagnetizationField& f)
{
    for (std::size_t i = 0; i < f.size(); ++i) {
        Vec3 m = f.at(i);
        const double nm = norm(m);
        if (!(nm > 0.0) || !std::isfinite(nm))
            throw DegenerateStateError("project_to_sphere: zero or non-finite vector at node " + std::to_string(i));
        if (nm != 1.0) {
            for (double& c : m) c /= nm;
            f.set(i, m);
        }
    }
}

inline MagnetizationField project_to_sphere(MagnetizationField f)
{
    project_to_sphere_inplace(f);
    return f;
}

inline double max_norm_defect(const MagnetizationField& f)
{
    double d = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) d = std::max(d, std::abs(norm(f.at(i)) - 1.0));
    return d;
}

// ---------------------------------------------------------------------------
// Boundary data
// ---------------------------------------------------------------------------

struct BoundaryCondition {
    double theta_b = 0.0;
    double phi_b = 0.0;

    BoundaryCondition() = default;
    BoundaryCondition(double theta, double phi) : theta_b(theta), phi_b(phi)
    {
        if (!(theta >= 0.0 && theta < 2.0 * pi)) throw PreconditionError("BoundaryCondition: theta_b outside [0, 2pi)");
    }

    /// tan(theta_b / 2); infinite at theta_b = pi.
    double q() const { return std::tan(0.5 * theta_b); }
    Vec3 value() const { return euler_to_cartesian(theta_b, phi_b); }
};

} // namespace llg
