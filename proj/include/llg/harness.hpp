#pragma once

// Batch experiments: single runs, gamma sweeps, bisection for the blowup
// parameter, and prediction tables from the reduced systems.

#include "asymptotics.hpp"
#include "config.hpp"
#include "initial_data.hpp"

#include <json.hpp>

#include <cstdio>
#include <future>

namespace llg {

struct RunRecord {
    ExperimentConfig config;
    Termination reason = Termination::StepLimit;
    Outcome outcome;
    std::string message;
    std::vector<Sample> samples;
    std::optional<BubbleFit> bubble;        ///< fit on the final state
    std::vector<RateFit> rates;             ///< one per model, when the window allows
    std::optional<RotationMeasure> rotation;
    std::optional<AngleMeasure> angle;
    double predicted_angle = 0.0;
    MagnetizationField final_field;
    RadialMesh final_mesh;
    double t_final = 0.0;
    long steps = 0;
    std::filesystem::path trajectory_csv;
    std::filesystem::path summary_json;

    const RateFit* rate(RateModel m) const
    {
        for (const auto& r : rates)
            if (r.model == m) return &r;
        return nullptr;
    }
};

namespace detail {

inline MagnetizationField cartesian_data(const InitialDataSpec& s, const RadialMesh& mesh)
{
    switch (s.kind) {
    case InitKind::theta_linear: return theta_linear_cartesian(mesh, s.phi);
    case InitKind::gamma_family: return gamma_family(mesh, s.gamma);
    case InitKind::degree1_generic: return degree1_family(mesh, s.s, Degree1Variant::generic, s.theta_b);
    case InitKind::degree1_north: return degree1_family(mesh, s.s, Degree1Variant::north);
    case InitKind::constant_north: return MagnetizationField::constant(mesh.size(), {0.0, 0.0, 1.0});
    }
    throw PreconditionError("unknown initial data");
}

inline EulerField radial_data(const InitialDataSpec& s, const RadialMesh& mesh)
{
    switch (s.kind) {
    case InitKind::theta_linear: return theta_linear(mesh, s.phi);
    case InitKind::constant_north: return EulerField(mesh.size());
    default: throw PreconditionError("radial model supports only theta_linear and constant_north data");
    }
}

template <class Model, class Sampler>
RunRecord simulate(const ExperimentConfig& c, const Model& model, Sampler&& sampler, bool fits)
{
    RunOptions opt;
    opt.sample_every = c.sample_every;
    opt.fit_bubbles = fits;
    opt.fit = c.fit;
    auto st = make_state(model, sampler, c.integ, c.adapt_initial);
    auto res = run_until(std::move(st), model, c.stop, c.integ, opt);

    RunRecord rec;
    rec.config = c;
    rec.reason = res.reason;
    rec.message = res.message;
    rec.outcome = classify(res.samples, res.reason, c.classify);
    rec.t_final = res.final_state.t;
    rec.steps = res.final_state.step_count;
    rec.final_mesh = res.final_state.mesh;
    if constexpr (std::is_same_v<typename Model::Field, EulerField>)
        rec.final_field = to_cartesian(res.final_state.field);
    else
        rec.final_field = res.final_state.field;
    rec.predicted_angle = predicted_angle(c.params());

    if (fits) {
        try {
            rec.bubble = Model::fit(res.final_state.field, res.final_state.mesh, c.fit);
        } catch (const Error&) {
        }
        try {
            rec.rotation = rotation_angle(res.samples);
        } catch (const Error&) {
        }
        const auto window = rate_window(res.samples, c.rate_window);
        for (RateModel m : {RateModel::log_corrected, RateModel::similarity, RateModel::linear}) {
            try {
                rec.rates.push_back(fit_rate(window, m));
            } catch (const Error&) {
            }
        }
        if (rec.bubble && res.reason == Termination::GradientThreshold) {
            try {
                rec.angle = inner_outer_angle(rec.final_field, rec.final_mesh, *rec.bubble, c.angle);
            } catch (const Error&) {
            }
        }
    }
    rec.samples = std::move(res.samples);
    return rec;
}

inline std::string csv_opt(const std::optional<double>& x)
{
    if (!x) return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *x);
    return buf;
}

} // namespace detail

/// Runs one configuration in memory.
inline RunRecord simulate(const ExperimentConfig& c, bool fits = true)
{
    if (c.model == ModelKind::radial) {
        const RadialModel model{c.n};
        return detail::simulate(c, model, [&](const RadialMesh& m) { return detail::radial_data(c.init, m); }, fits);
    }
    const CartesianModel model{c.params()};
    return detail::simulate(c, model, [&](const RadialMesh& m) { return detail::cartesian_data(c.init, m); }, fits);
}

inline nlohmann::json summary_json(const RunRecord& r)
{
    nlohmann::json j;
    j["termination"] = to_string(r.reason);
    j["message"] = r.message;
    j["outcome"] = to_string(r.outcome.tag);
    j["peak_grad_inf"] = r.outcome.peak_grad;
    j["rotation"] = r.outcome.rotation;
    j["t_final"] = r.t_final;
    j["steps"] = r.steps;
    j["alpha"] = r.config.params().alpha();
    j["beta"] = r.config.params().beta();
    j["predicted_angle"] = r.predicted_angle;
    if (r.bubble) j["bubble"] = {{"R", r.bubble->R}, {"C", r.bubble->C}, {"residual", r.bubble->residual}};
    if (r.rotation) j["fitted_rotation"] = {{"delta", r.rotation->delta}, {"fitted", r.rotation->fitted}, {"gaps", r.rotation->gaps}};
    for (const auto& f : r.rates)
        j["rate"][to_string(f.model)] = {{"kappa", f.kappa}, {"T", f.T},       {"t_lo", f.t_lo},
                                         {"t_hi", f.t_hi},   {"residual", f.residual}, {"samples", f.samples}};
    if (r.angle)
        j["angle"] = {{"inner", r.angle->inner}, {"outer", r.angle->outer}, {"measured", r.angle->difference},
                      {"predicted", r.predicted_angle}};
    if (!r.trajectory_csv.empty()) j["trajectory_csv"] = r.trajectory_csv.filename().string();
    j["config"] = to_text(r.config);
    return j;
}

/// Writes trajectory.csv and summary.json into dir.
inline void write_record(RunRecord& r, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    r.trajectory_csv = dir / "trajectory.csv";
    r.summary_json = dir / "summary.json";
    {
        std::ofstream out(r.trajectory_csv);
        out << "step,t,dt,grad_inf,E,R_fit,C_fit\n";
        char buf[256];
        for (const auto& s : r.samples) {
            std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,", s.step, s.t, s.dt, s.grad_inf, s.energy);
            out << buf << detail::csv_opt(s.R_fit) << ',' << detail::csv_opt(s.C_fit) << '\n';
        }
    }
    std::ofstream(r.summary_json) << summary_json(r).dump(2) << '\n';
}

/// simulate followed by write_record into config.output_dir.
inline RunRecord run(const ExperimentConfig& c)
{
    RunRecord r = simulate(c);
    write_record(r, c.output_dir);
    return r;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepRow {
    double gamma = 0.0;
    std::optional<RunRecord> record;
    std::string error;  ///< set when the run threw
};

/// One run per gamma on the gamma family, each in its own directory
/// output_dir/gamma_<value>, plus an aggregated sweep.csv. Runs execute on up
/// to `jobs` threads.
inline std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::vector<double>& gammas, unsigned jobs = 1,
                                   bool write = true)
{
    for (double g : gammas)
        if (!(g >= 0.0 && g <= 1.0)) throw PreconditionError("sweep: gamma values must lie in [0, 1]");
    std::vector<SweepRow> rows(gammas.size());
    auto one = [&](std::size_t k) {
        ExperimentConfig c = base;
        c.init.kind = InitKind::gamma_family;
        c.init.gamma = gammas[k];
        char name[64];
        std::snprintf(name, sizeof name, "gamma_%.6f", gammas[k]);
        c.output_dir = (std::filesystem::path(base.output_dir) / name).string();
        rows[k].gamma = gammas[k];
        try {
            rows[k].record = write ? run(c) : simulate(c);
        } catch (const std::exception& e) {
            rows[k].error = e.what();
        }
    };
    jobs = std::max(1u, jobs);
    for (std::size_t start = 0; start < gammas.size(); start += jobs) {
        std::vector<std::future<void>> batch;
        for (std::size_t k = start; k < std::min(gammas.size(), start + jobs); ++k)
            batch.push_back(std::async(std::launch::async, one, k));
        for (auto& f : batch) f.get();
    }
    if (write) {
        std::filesystem::create_directories(base.output_dir);
        std::ofstream out(std::filesystem::path(base.output_dir) / "sweep.csv");
        out << "gamma,peak_grad_inf,outcome,rotation,termination\n";
        char buf[128];
        for (const auto& r : rows) {
            if (!r.record) {
                std::snprintf(buf, sizeof buf, "%.17g,,error,,", r.gamma);
                out << buf << '\n';
                continue;
            }
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s,%.17g,%s", r.gamma, r.record->outcome.peak_grad,
                          to_string(r.record->outcome.tag), r.record->outcome.rotation, to_string(r.record->reason));
            out << buf << '\n';
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Bisection
// ---------------------------------------------------------------------------

struct BisectStep {
    double gamma = 0.0;
    Outcome outcome;
    bool retried = false;
};

struct BisectResult {
    double gamma_star = 0.0;
    double lo = 0.0, hi = 0.0;
    std::vector<BisectStep> steps;
    RunRecord final_run;
};

namespace detail {

/// Classifies one gamma; an Undetermined outcome gets one retry with a ten
/// times smaller equilibrium tolerance and twice the time limit.
inline BisectStep probe(const ExperimentConfig& base, double gamma)
{
    ExperimentConfig c = base;
    c.init.kind = InitKind::gamma_family;
    c.init.gamma = gamma;
    BisectStep s{gamma, simulate(c, false).outcome, false};
    if (s.outcome.tag == OutcomeTag::Undetermined) {
        if (c.stop.eq_tol) *c.stop.eq_tol *= 0.1;
        if (c.stop.t_max) *c.stop.t_max *= 2.0;
        s.outcome = simulate(c, false).outcome;
        s.retried = true;
    }
    return s;
}

inline bool is_decay(OutcomeTag t) { return t == OutcomeTag::DecayPlus || t == OutcomeTag::DecayMinus; }

} // namespace detail

/// Bisection on the rotation sign over the gamma family. A midpoint that
/// blows up is on the separatrix within resolution and ends the search.
inline BisectResult bisect(const ExperimentConfig& base, double lo, double hi, double tol,
                           const std::function<void(const BisectStep&)>& progress = {})
{
    if (!(lo < hi) || !(tol > 0.0)) throw PreconditionError("bisect: need lo < hi and tol > 0");
    if (!base.stop.eq_tol && !base.stop.t_max)
        throw PreconditionError("bisect: decays need stop.eq_tol or stop.t_max to terminate");
    BisectResult res;
    auto note = [&](const BisectStep& s) {
        res.steps.push_back(s);
        if (progress) progress(s);
    };
    const auto a = detail::probe(base, lo);
    note(a);
    const auto b = detail::probe(base, hi);
    note(b);
    if (!detail::is_decay(a.outcome.tag) || !detail::is_decay(b.outcome.tag) || a.outcome.tag == b.outcome.tag)
        throw PreconditionError("bisect: bracket ends must decay with opposite rotation signs");
    const OutcomeTag lo_tag = a.outcome.tag;
    std::optional<double> hit;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const auto m = detail::probe(base, mid);
        note(m);
        if (m.outcome.tag == OutcomeTag::Blowup) {
            hit = mid;
            break;
        }
        if (!detail::is_decay(m.outcome.tag)) throw SolverError("bisect: undetermined outcome at gamma = " + std::to_string(mid));
        (m.outcome.tag == lo_tag ? lo : hi) = mid;
    }
    res.lo = lo;
    res.hi = hi;
    res.gamma_star = hit ? *hit : 0.5 * (lo + hi);
    ExperimentConfig c = base;
    c.init.kind = InitKind::gamma_family;
    c.init.gamma = res.gamma_star;
    res.final_run = simulate(c);
    return res;
}

inline void write_bisect(BisectResult& b, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "bisect.csv");
    out << "gamma,outcome,rotation,peak_grad_inf,retried\n";
    char buf[160];
    for (const auto& s : b.steps) {
        std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g,%d", s.gamma, to_string(s.outcome.tag), s.outcome.rotation,
                      s.outcome.peak_grad, s.retried ? 1 : 0);
        out << buf << '\n';
    }
    write_record(b.final_run, dir / "final");
    nlohmann::json j;
    j["gamma_star"] = b.gamma_star;
    j["bracket"] = {b.lo, b.hi};
    j["iterations"] = b.steps.size();
    j["final_outcome"] = to_string(b.final_run.outcome.tag);
    std::ofstream(dir / "bisect.json") << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Prediction tables
// ---------------------------------------------------------------------------

struct AsymptoticsReport {
    std::filesystem::path en_table, separatrix, higher_n, comparison;
    double max_en_diff = 0.0;
    double max_separatrix_err = 0.0;
};

/// Writes en_table.csv, separatrix.csv and higher_n.csv into dir. With a run
/// directory attached, compare.json holds predicted against measured angle
/// and rotation.
inline AsymptoticsReport report_asymptotics(int n_max, const std::filesystem::path& dir,
                                            const std::optional<std::filesystem::path>& attach = std::nullopt)
{
    if (n_max < 2) throw PreconditionError("report_asymptotics: n_max must be at least 2");
    std::filesystem::create_directories(dir);
    AsymptoticsReport rep;
    char buf[256];

    rep.en_table = dir / "en_table.csv";
    {
        std::ofstream out(rep.en_table);
        out << "n,closed_form,quadrature,abs_diff\n";
        for (int n = 2; n <= n_max; ++n) {
            const double a = En(n), b = En_quadrature(n);
            rep.max_en_diff = std::max(rep.max_en_diff, std::abs(a - b));
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.3e", n, a, b, std::abs(a - b));
            out << buf << '\n';
        }
    }

    rep.separatrix = dir / "separatrix.csv";
    {
        std::ofstream out(rep.separatrix);
        out << "C0,t,numeric,closed_form\n";
        for (double C0 : {1e-6, 0.5, pi / 2.0, 2.5, -pi / 2.0}) {
            for (const auto& p : separatrix_ode(C0, -10.0, 10.0, 201)) {
                rep.max_separatrix_err = std::max(rep.max_separatrix_err, std::abs(p.numeric - p.closed));
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", C0, p.t, p.numeric, p.closed);
                out << buf << '\n';
            }
        }
    }

    rep.higher_n = dir / "higher_n.csv";
    {
        std::ofstream out(rep.higher_n);
        out << "n,C0,t,R,C_tilde\n";
        for (int n = 2; n <= n_max; ++n) {
            for (double C0 : {0.0, 1e-8, 0.5, pi - 0.5, pi}) {
                const auto res = higher_n_system(0.1, C0, n, 1.0, 50.0);
                const std::size_t stride = std::max<std::size_t>(1, res.path.size() / 200);
                for (std::size_t k = 0; k < res.path.size(); k += stride) {
                    const auto& p = res.path[k];
                    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g", n, C0, p.t, p.R, p.C_tilde);
                    out << buf << '\n';
                }
            }
        }
    }

    if (attach) {
        std::ifstream in(*attach / "summary.json");
        if (!in) throw PreconditionError("report_asymptotics: no summary.json in " + attach->string());
        const auto s = nlohmann::json::parse(in);
        nlohmann::json j;
        const LLGParams p(s.at("alpha").get<double>(), s.at("beta").get<double>());
        j["predicted_angle"] = predicted_angle(p);
        if (s.contains("angle")) j["measured_angle"] = s["angle"]["measured"];
        j["outcome"] = s.at("outcome");
        const double rot = s.at("rotation").get<double>();
        j["rotation"] = rot;
        if (s.at("outcome") != "Blowup") {
            j["predicted_rotation"] = rot >= 0.0 ? pi : -pi;
            j["rotation_rel_error"] = std::abs(std::abs(rot) - pi) / pi;
        }
        rep.comparison = dir / "compare.json";
        std::ofstream(rep.comparison) << j.dump(2) << '\n';
    }
    return rep;
}

} // namespace llg
