#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "manifest.hpp"

#include "mtrack/error.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDiagnostic = 3;

void add_model_flags(CLI::App* cmd, mtrack::cli::ModelOptions& m) {
    cmd->add_option("--gfunction", m.gfunction, "Link function")
        ->check(CLI::IsMember({"logistic", "gompertz"}))
        ->capture_default_str();
    cmd->add_option("--sigma-x", m.sigma_x, "State innovation sd")->capture_default_str();
    cmd->add_option("--lambda", m.lambda, "Concentration rate")->capture_default_str();
    cmd->add_option("--kappa-lb", m.kappa_lb, "Lower concentration bound")->capture_default_str();
    cmd->add_option("--kappa-ub", m.kappa_ub, "Upper concentration bound")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace mtrack::cli;
    CLI::App app{"Bayesian state-space modelling of mouse-tracking trajectories", "mtrack"};
    app.set_version_flag("--version", std::string(tool_version()));
    app.require_subcommand(1);

    PrepareOptions prep;
    auto* p = app.add_subcommand("prepare", "Turn raw x-y tracking records into an angle dataset");
    p->add_option("input", prep.input, "Long-format CSV: sbj,trial,<factors>,timestep,x,y")
        ->required()
        ->check(CLI::ExistingFile);
    p->add_option("--n-steps,-N", prep.n_steps, "Common number of time steps")->capture_default_str();
    p->add_option("--formula", prep.formula, "Design formula, e.g. ~condition")->required();
    p->add_option("--out,-o", prep.out, "Output directory")->required();

    FitOptions fit;
    auto* f = app.add_subcommand("fit", "Sample the posterior of gamma");
    f->add_option("dataset", fit.dataset, "Prepared dataset or simulation directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    f->add_option("--replicate", fit.replicate, "Replicate number inside a simulation directory");
    f->add_option("--priors", fit.priors, "One prior per Z column; null selects the default")
        ->check(CLI::ExistingFile);
    add_model_flags(f, fit.model);
    f->add_option("--niter", fit.niter)->capture_default_str();
    f->add_option("--nwarmup", fit.nwarmup)->capture_default_str();
    f->add_option("--nchains", fit.nchains)->capture_default_str();
    f->add_option("--seed", fit.seed)->capture_default_str();
    f->add_option("--variant", fit.variant, "Filter variance recursion")
        ->check(CLI::IsMember({"textbook", "as-printed", "as_printed"}))
        ->capture_default_str();
    f->add_option("--threads", fit.threads, "Worker cap (0: one per chain)")->capture_default_str();
    f->add_option("--max-state-draws", fit.max_state_draws)->capture_default_str();
    f->add_option("--out,-o", fit.out, "Output directory")->required();

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Generate synthetic datasets from a TOML design spec");
    s->add_option("--spec", sim.spec, "TOML design spec")->required()->check(CLI::ExistingFile);
    s->add_option("--priors", sim.priors)->check(CLI::ExistingFile);
    s->add_option("-M", sim.M, "Number of replicates")->capture_default_str();
    s->add_option("--seed", sim.seed)->capture_default_str();
    s->add_option("--out,-o", sim.out, "Output directory")->required();

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "Posterior-predictive PA and DTW indices");
    e->add_option("fit", ev.fit, "Fit directory")->required()->check(CLI::ExistingDirectory);
    e->add_option("dataset", ev.dataset, "Dataset the fit was run on")->required()->check(CLI::ExistingDirectory);
    e->add_option("--replicate", ev.replicate);
    e->add_option("-M", ev.M, "Number of replicated datasets")->capture_default_str();
    e->add_option("--seed", ev.seed)->capture_default_str();
    e->add_option("--threads", ev.threads)->capture_default_str();
    e->add_flag("--plots", ev.plots, "Write SVG plots");
    e->add_option("--out,-o", ev.out, "Output directory")->required();

    EvidenceOptions evd;
    auto* w = app.add_subcommand("evidence", "Windowed log-odds from the filtered states");
    w->add_option("fit", evd.fit, "Fit directory")->required()->check(CLI::ExistingDirectory);
    w->add_option("--windows", evd.windows, "Comma-separated lo:hi percentages")->capture_default_str();
    w->add_option("--out,-o", evd.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ok) {
        return app.exit(ok);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitInput;
    }

    try {
        if (*p) return cmd_prepare(prep);
        if (*f) return cmd_fit(fit);
        if (*s) return cmd_simulate(sim);
        if (*e) return cmd_evaluate(ev);
        if (*w) return cmd_evidence(evd);
    } catch (const mtrack::DiagnosticError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitDiagnostic;
    } catch (const mtrack::ValidationError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    } catch (const mtrack::UnsupportedError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    } catch (const std::exception& err) {
        std::cerr << "internal error: " << err.what() << '\n';
        return 1;
    }
    return kExitInput;
}
