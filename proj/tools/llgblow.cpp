// Command-line front end: run, sweep, bisect, asymptotics.

#include "llg/llg.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <thread>

namespace {

constexpr int exit_precondition = 2;
constexpr int exit_solver = 3;

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = llg::detail::trim(item);
        if (!item.empty()) out.push_back(llg::detail::parse_double("--gamma", item));
    }
    if (out.empty()) throw llg::PreconditionError("--gamma: empty list");
    return out;
}

void print_record(const llg::RunRecord& r)
{
    std::cout << "outcome " << llg::to_string(r.outcome.tag) << "  termination " << llg::to_string(r.reason)
              << "  peak |grad m| " << r.outcome.peak_grad << "  t " << r.t_final << "  rotation "
              << r.outcome.rotation << '\n';
    if (r.angle)
        std::cout << "inner/outer angle " << r.angle->difference << "  predicted " << r.predicted_angle << '\n';
    if (const auto* f = r.rate(llg::RateModel::log_corrected))
        std::cout << "rate fit kappa " << f->kappa << "  T " << f->T << "  residual " << f->residual << '\n';
    if (!r.message.empty()) std::cout << "note: " << r.message << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Equivariant Landau-Lifshitz-Gilbert blowup experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    };

    auto* run = app.add_subcommand("run", "single simulation");
    add_common(run);

    auto* sweep = app.add_subcommand("sweep", "gamma sweep over the gamma family");
    add_common(sweep);
    std::string gammas;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    sweep->add_option("--gamma", gammas, "comma separated gamma values")->required();
    sweep->add_option("--jobs", jobs, "concurrent runs");

    auto* bis = app.add_subcommand("bisect", "locate the blowup parameter on the gamma family");
    add_common(bis);
    double lo = 0.0, hi = 1.0, tol = 1e-3;
    bis->add_option("--lo", lo)->required();
    bis->add_option("--hi", hi)->required();
    bis->add_option("--tol", tol)->required();

    auto* asy = app.add_subcommand("asymptotics", "prediction tables from the reduced systems");
    int n_max = 6;
    std::string attach;
    std::string asy_out = "asymptotics";
    asy->add_option("--n-max", n_max)->required();
    asy->add_option("--attach", attach, "run directory with summary.json");
    asy->add_option("--out", asy_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*asy) {
            const auto rep = llg::report_asymptotics(
                n_max, asy_out, attach.empty() ? std::nullopt : std::optional<std::filesystem::path>(attach));
            std::cout << "E_n max |closed - quadrature| " << rep.max_en_diff << "\nseparatrix max error "
                      << rep.max_separatrix_err << "\nwritten to " << asy_out << '\n';
            return 0;
        }
        auto cfg = llg::load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (*run) {
            const auto r = llg::run(cfg);
            print_record(r);
            std::cout << "written to " << cfg.output_dir << '\n';
            return r.reason == llg::Termination::SolverFailure ? exit_solver : 0;
        }
        if (*sweep) {
            const auto rows = llg::sweep(cfg, parse_list(gammas), jobs);
            bool failed = false;
            for (const auto& row : rows) {
                std::cout << "gamma " << row.gamma << ": ";
                if (!row.record) {
                    std::cout << "error " << row.error << '\n';
                    failed = true;
                    continue;
                }
                failed |= row.record->reason == llg::Termination::SolverFailure;
                print_record(*row.record);
            }
            return failed ? exit_solver : 0;
        }
        if (*bis) {
            auto b = llg::bisect(cfg, lo, hi, tol, [](const llg::BisectStep& s) {
                std::cout << "gamma " << s.gamma << " -> " << llg::to_string(s.outcome.tag) << " (rotation "
                          << s.outcome.rotation << ")\n";
            });
            llg::write_bisect(b, cfg.output_dir);
            std::cout << "gamma* " << b.gamma_star << "  bracket [" << b.lo << ", " << b.hi << "]\n";
            print_record(b.final_run);
            return 0;
        }
    } catch (const llg::PreconditionError& e) {
        std::cerr << "precondition failure: " << e.what() << '\n';
        return exit_precondition;
    } catch (const llg::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return exit_solver;
    } catch (const llg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_solver;
    }
    return 0;
}
