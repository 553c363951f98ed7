#pragma once

// Experiment configuration as flat key=value text.
//
//   # comment
//   params.alpha = 0.7071067811865476
//   init.kind = gamma_family
//
// Unknown keys are rejected, so a typo never silently falls back to a default.

#include "diagnostics.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace llg {

enum class ModelKind { cartesian, radial };
enum class InitKind { theta_linear, gamma_family, degree1_generic, degree1_north, constant_north };

struct InitialDataSpec {
    InitKind kind = InitKind::theta_linear;
    double gamma = 0.5;
    double s = 0.5;
    double theta_b = pi / 2.0;
    double phi = pi / 4.0;  ///< azimuth of the Cartesian linear data
};

struct ExperimentConfig {
    ModelKind model = ModelKind::cartesian;
    double alpha = 0.0;
    double beta = 1.0;
    int n = 1;
    InitialDataSpec init;
    IntegratorConfig integ;
    bool adapt_initial = true;
    StopSpec stop{1e8, std::nullopt, std::nullopt, std::nullopt};
    long sample_every = 1;
    BubbleFitConfig fit;
    ClassifyConfig classify;
    AngleConfig angle;
    double rate_window = 1e-2;
    std::string output_dir = "out";

    LLGParams params() const { return {alpha, beta, n}; }
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v)
{
    double x = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw PreconditionError("config: " + key + " expects a number, got '" + v + "'");
    return x;
}

inline long parse_long(const std::string& key, const std::string& v)
{
    long x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw PreconditionError("config: " + key + " expects an integer, got '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw PreconditionError("config: " + key + " expects true or false, got '" + v + "'");
}

inline std::string fmt(double x)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

template <class E, std::size_t N>
E parse_enum(const std::string& key, const std::string& v, const std::array<std::pair<const char*, E>, N>& names)
{
    for (const auto& [name, e] : names)
        if (v == name) return e;
    throw PreconditionError("config: unknown value '" + v + "' for " + key);
}

template <class E, std::size_t N>
std::string enum_name(E e, const std::array<std::pair<const char*, E>, N>& names)
{
    for (const auto& [name, x] : names)
        if (x == e) return name;
    return "?";
}

inline constexpr std::array<std::pair<const char*, ModelKind>, 2> model_names{
    {{"cartesian", ModelKind::cartesian}, {"radial", ModelKind::radial}}};
inline constexpr std::array<std::pair<const char*, InitKind>, 5> init_names{{{"theta_linear", InitKind::theta_linear},
                                                                             {"gamma_family", InitKind::gamma_family},
                                                                             {"degree1_generic", InitKind::degree1_generic},
                                                                             {"degree1_north", InitKind::degree1_north},
                                                                             {"constant_north", InitKind::constant_north}}};
inline constexpr std::array<std::pair<const char*, Scheme>, 2> scheme_names{
    {{"rosenbrock", Scheme::rosenbrock}, {"explicit", Scheme::explicit_rk}}};
inline constexpr std::array<std::pair<const char*, IntegralWeight>, 2> weight_names{
    {{"dr", IntegralWeight::dr}, {"r_dr", IntegralWeight::r_dr}}};

} // namespace detail

/// Applies one key. Optional stop criteria are cleared with the value "none".
inline void set_key(ExperimentConfig& c, const std::string& key, const std::string& v)
{
    using namespace detail;
    auto opt_d = [&](std::optional<double>& o) { o = v == "none" ? std::nullopt : std::optional(parse_double(key, v)); };
    static const std::map<std::string, std::function<void(ExperimentConfig&, const std::string&, const std::string&)>>
        table = [] {
            std::map<std::string, std::function<void(ExperimentConfig&, const std::string&, const std::string&)>> t;
            t["model.kind"] = [](auto& c, auto& k, auto& v) { c.model = parse_enum(k, v, model_names); };
            t["params.alpha"] = [](auto& c, auto& k, auto& v) { c.alpha = parse_double(k, v); };
            t["params.beta"] = [](auto& c, auto& k, auto& v) { c.beta = parse_double(k, v); };
            t["params.n"] = [](auto& c, auto& k, auto& v) { c.n = static_cast<int>(parse_long(k, v)); };
            t["init.kind"] = [](auto& c, auto& k, auto& v) { c.init.kind = parse_enum(k, v, init_names); };
            t["init.gamma"] = [](auto& c, auto& k, auto& v) { c.init.gamma = parse_double(k, v); };
            t["init.s"] = [](auto& c, auto& k, auto& v) { c.init.s = parse_double(k, v); };
            t["init.theta_b"] = [](auto& c, auto& k, auto& v) { c.init.theta_b = parse_double(k, v); };
            t["init.phi"] = [](auto& c, auto& k, auto& v) { c.init.phi = parse_double(k, v); };
            t["mesh.n_nodes"] = [](auto& c, auto& k, auto& v) {
                c.integ.mesh.n_nodes = static_cast<std::size_t>(parse_long(k, v));
            };
            t["mesh.tau_mm"] = [](auto& c, auto& k, auto& v) { c.integ.mesh.tau_mm = parse_double(k, v); };
            t["mesh.smooth_passes"] = [](auto& c, auto& k, auto& v) {
                c.integ.mesh.smooth_passes = static_cast<int>(parse_long(k, v));
            };
            t["mesh.monitor_floor"] = [](auto& c, auto& k, auto& v) { c.integ.mesh.floor_rel = parse_double(k, v); };
            t["mesh.monitor_floor_abs"] = [](auto& c, auto& k, auto& v) { c.integ.mesh.floor_abs = parse_double(k, v); };
            t["mesh.adapt_initial"] = [](auto& c, auto& k, auto& v) { c.adapt_initial = parse_bool(k, v); };
            t["monitor.integral_weight"] = [](auto& c, auto& k, auto& v) {
                c.integ.mesh.integral_weight = parse_enum(k, v, weight_names);
            };
            t["integ.scheme"] = [](auto& c, auto& k, auto& v) { c.integ.scheme = parse_enum(k, v, scheme_names); };
            t["integ.ds"] = [](auto& c, auto& k, auto& v) { c.integ.ds = parse_double(k, v); };
            t["integ.ds_max"] = [](auto& c, auto& k, auto& v) { c.integ.ds_max = parse_double(k, v); };
            t["integ.rtol"] = [](auto& c, auto& k, auto& v) { c.integ.rtol = parse_double(k, v); };
            t["integ.atol"] = [](auto& c, auto& k, auto& v) { c.integ.atol = parse_double(k, v); };
            t["integ.cfl"] = [](auto& c, auto& k, auto& v) { c.integ.cfl = parse_double(k, v); };
            t["integ.max_halvings"] = [](auto& c, auto& k, auto& v) {
                c.integ.max_halvings = static_cast<int>(parse_long(k, v));
            };
            t["integ.energy_tol"] = [](auto& c, auto& k, auto& v) { c.integ.energy_tol = parse_double(k, v); };
            t["integ.check_energy"] = [](auto& c, auto& k, auto& v) { c.integ.check_energy = parse_bool(k, v); };
            t["integ.remesh"] = [](auto& c, auto& k, auto& v) { c.integ.remesh = parse_bool(k, v); };
            t["integ.well_balanced"] = [](auto& c, auto& k, auto& v) { c.integ.well_balanced = parse_bool(k, v); };
            t["sample.every_steps"] = [](auto& c, auto& k, auto& v) { c.sample_every = parse_long(k, v); };
            t["diag.fit_window"] = [](auto& c, auto& k, auto& v) { c.fit.window = parse_double(k, v); };
            t["diag.fit_min_grad"] = [](auto& c, auto& k, auto& v) { c.fit.min_grad = parse_double(k, v); };
            t["diag.fit_max_residual"] = [](auto& c, auto& k, auto& v) { c.fit.max_residual = parse_double(k, v); };
            t["diag.min_rotation"] = [](auto& c, auto& k, auto& v) { c.classify.min_rotation = parse_double(k, v); };
            t["diag.rate_window"] = [](auto& c, auto& k, auto& v) { c.rate_window = parse_double(k, v); };
            t["diag.outer_lo"] = [](auto& c, auto& k, auto& v) { c.angle.outer_lo = parse_double(k, v); };
            t["diag.outer_hi"] = [](auto& c, auto& k, auto& v) { c.angle.outer_hi = parse_double(k, v); };
            t["output.dir"] = [](auto& c, auto&, auto& v) { c.output_dir = v; };
            return t;
        }();
    if (key == "stop.grad_inf") return opt_d(c.stop.grad_inf);
    if (key == "stop.t_max") return opt_d(c.stop.t_max);
    if (key == "stop.eq_tol") return opt_d(c.stop.eq_tol);
    if (key == "stop.max_steps") {
        c.stop.max_steps = v == "none" ? std::nullopt : std::optional(parse_long(key, v));
        return;
    }
    const auto it = table.find(key);
    if (it == table.end()) throw PreconditionError("config: unknown key '" + key + "'");
    it->second(c, key, v);
}

inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig c = {})
{
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = detail::trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw PreconditionError("config: line " + std::to_string(lineno) + " is not key = value");
        set_key(c, detail::trim(std::string_view(body).substr(0, eq)), detail::trim(std::string_view(body).substr(eq + 1)));
    }
    return c;
}

inline ExperimentConfig parse_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw PreconditionError("config: cannot open " + path.string());
    return parse_config(in);
}

/// Every key, in a form parse_config reads back to an equal configuration.
inline std::string to_text(const ExperimentConfig& c)
{
    using namespace detail;
    std::ostringstream o;
    auto opt = [](const auto& x) { return x ? fmt(static_cast<double>(*x)) : std::string("none"); };
    o << "model.kind = " << enum_name(c.model, model_names) << '\n'
      << "params.alpha = " << fmt(c.alpha) << '\n'
      << "params.beta = " << fmt(c.beta) << '\n'
      << "params.n = " << c.n << '\n'
      << "init.kind = " << enum_name(c.init.kind, init_names) << '\n'
      << "init.gamma = " << fmt(c.init.gamma) << '\n'
      << "init.s = " << fmt(c.init.s) << '\n'
      << "init.theta_b = " << fmt(c.init.theta_b) << '\n'
      << "init.phi = " << fmt(c.init.phi) << '\n'
      << "mesh.n_nodes = " << c.integ.mesh.n_nodes << '\n'
      << "mesh.tau_mm = " << fmt(c.integ.mesh.tau_mm) << '\n'
      << "mesh.smooth_passes = " << c.integ.mesh.smooth_passes << '\n'
      << "mesh.monitor_floor = " << fmt(c.integ.mesh.floor_rel) << '\n'
      << "mesh.monitor_floor_abs = " << fmt(c.integ.mesh.floor_abs) << '\n'
      << "mesh.adapt_initial = " << (c.adapt_initial ? "true" : "false") << '\n'
      << "monitor.integral_weight = " << enum_name(c.integ.mesh.integral_weight, weight_names) << '\n'
      << "integ.scheme = " << enum_name(c.integ.scheme, scheme_names) << '\n'
      << "integ.ds = " << fmt(c.integ.ds) << '\n'
      << "integ.ds_max = " << fmt(c.integ.ds_max) << '\n'
      << "integ.rtol = " << fmt(c.integ.rtol) << '\n'
      << "integ.atol = " << fmt(c.integ.atol) << '\n'
      << "integ.cfl = " << fmt(c.integ.cfl) << '\n'
      << "integ.max_halvings = " << c.integ.max_halvings << '\n'
      << "integ.energy_tol = " << fmt(c.integ.energy_tol) << '\n'
      << "integ.check_energy = " << (c.integ.check_energy ? "true" : "false") << '\n'
      << "integ.remesh = " << (c.integ.remesh ? "true" : "false") << '\n'
      << "integ.well_balanced = " << (c.integ.well_balanced ? "true" : "false") << '\n'
      << "stop.grad_inf = " << opt(c.stop.grad_inf) << '\n'
      << "stop.t_max = " << opt(c.stop.t_max) << '\n'
      << "stop.max_steps = " << (c.stop.max_steps ? std::to_string(*c.stop.max_steps) : "none") << '\n'
      << "stop.eq_tol = " << opt(c.stop.eq_tol) << '\n'
      << "sample.every_steps = " << c.sample_every << '\n'
      << "diag.fit_window = " << fmt(c.fit.window) << '\n'
      << "diag.fit_min_grad = " << fmt(c.fit.min_grad) << '\n'
      << "diag.fit_max_residual = " << fmt(c.fit.max_residual) << '\n'
      << "diag.min_rotation = " << fmt(c.classify.min_rotation) << '\n'
      << "diag.rate_window = " << fmt(c.rate_window) << '\n'
      << "diag.outer_lo = " << fmt(c.angle.outer_lo) << '\n'
      << "diag.outer_hi = " << fmt(c.angle.outer_hi) << '\n'
      << "output.dir = " << c.output_dir << '\n';
    return o.str();
}

} // namespace llg
