#include "commands.hpp"

#include <fstream>
#include <iostream>

#include "json.hpp"
#include "toml.hpp"

#include "manifest.hpp"
#include "svg.hpp"

#include "mtrack/assess.hpp"
#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/inference.hpp"
#include "mtrack/preprocess.hpp"
#include "mtrack/simulate.hpp"

namespace mtrack::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiagnostic = 3;

ModelConfig make_config(const ModelOptions& m) {
    ModelConfig cfg;
    cfg.link = parse_link(m.gfunction);
    cfg.sigma_x = m.sigma_x;
    cfg.lambda = m.lambda;
    cfg.kappa_bounds = {m.kappa_lb, m.kappa_ub};
    cfg.validate();
    return cfg;
}

json config_json(const ModelConfig& cfg) {
    return {{"gfunction", std::string(to_string(cfg.link))},
            {"sigma_x", cfg.sigma_x},
            {"lambda", cfg.lambda},
            {"kappa_bounds", {cfg.kappa_bounds.lb, cfg.kappa_bounds.ub}}};
}

ModelConfig config_from_json(const json& j) {
    ModelOptions m;
    m.gfunction = j.at("gfunction").get<std::string>();
    m.sigma_x = j.at("sigma_x").get<double>();
    m.lambda = j.at("lambda").get<double>();
    m.kappa_lb = j.at("kappa_bounds").at(0).get<double>();
    m.kappa_ub = j.at("kappa_bounds").at(1).get<double>();
    return make_config(m);
}

std::vector<PriorSpec> load_priors(const std::optional<fs::path>& file, std::size_t K) {
    if (!file) return std::vector<PriorSpec>(K, default_prior());
    const auto entries = read_priors_file(*file);
    if (entries.size() != K)
        throw ValidationError("priors file lists " + std::to_string(entries.size()) + " entries but the design has " +
                              std::to_string(K) + " columns");
    return resolve_priors(entries);
}

json prior_sources(std::span<const PriorSpec> priors) {
    json out = json::array();
    for (const auto& p : priors) out.push_back(p.source);
    return out;
}

void save_json(const fs::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

json load_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("missing " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.filename().string() + ": " + e.what());
    }
}

ProcessedDataset load_dataset(const fs::path& dir, const std::optional<std::size_t>& replicate) {
    return replicate ? read_simulated_dataset(dir, *replicate) : read_dataset(dir);
}

template <class T>
T toml_get(const toml::table& t, std::string_view key, T fallback) {
    const auto node = t[key];
    if (!node) return fallback;
    if (auto v = node.value<T>()) return *v;
    throw ValidationError("spec: key '" + std::string(key) + "' has the wrong type");
}

std::size_t toml_count(const toml::table& t, std::string_view key, std::size_t fallback) {
    const auto v = toml_get<std::int64_t>(t, key, static_cast<std::int64_t>(fallback));
    if (v < 1) throw ValidationError("spec: '" + std::string(key) + "' must be a positive integer");
    return static_cast<std::size_t>(v);
}

}  // namespace

int cmd_prepare(const PrepareOptions& o) {
    const RawTrajectorySet raw = read_raw_csv(o.input);
    const PreparedData prepared = prepare_data(raw, o.n_steps, o.formula);
    write_dataset(o.out, prepared.dataset);
    {
        std::ofstream out(o.out / "trajectories.csv", std::ios::binary);
        if (!out) throw ValidationError("cannot write " + (o.out / "trajectories.csv").string());
        write_raw_csv(out, prepared.normalized);
    }
    Manifest man("prepare");
    man.input("raw", o.input);
    man.flag("n_steps", o.n_steps);
    man.flag("formula", o.formula);
    man.write(o.out);
    const auto& d = prepared.dataset;
    std::cout << "prepared I=" << d.I << " J=" << d.J << " N=" << d.N << " K=" << d.K() << " -> "
              << o.out.string() << '\n';
    return kExitOk;
}

int cmd_fit(const FitOptions& o) {
    const ModelConfig cfg = make_config(o.model);
    const ProcessedDataset data = load_dataset(o.dataset, o.replicate);
    const auto priors = load_priors(o.priors, data.K());

    RunOptions ro;
    ro.niter = o.niter;
    ro.nwarmup = o.nwarmup;
    ro.nchains = o.nchains;
    ro.seed = o.seed;
    ro.variant = parse_variant(o.variant);
    ro.threads = o.threads;
    ro.max_state_draws = o.max_state_draws;

    const FitResult fit = run_ssm(data, priors, cfg, ro);
    write_fit(o.out, fit, data.Z);

    json info;
    info["config"] = config_json(cfg);
    info["variant"] = std::string(to_string(ro.variant));
    info["priors"] = prior_sources(priors);
    info["niter"] = ro.niter;
    info["nwarmup"] = ro.nwarmup;
    info["nchains"] = ro.nchains;
    info["seed"] = ro.seed;
    info["chain_seeds"] = fit.draws.chain_seeds;
    info["accept_rate"] = fit.draws.accept_rate;
    info["draws_per_chain"] = fit.draws.draws_per_chain();
    info["total_draws"] = fit.draws.total_draws();
    info["state_draws"] = fit.draws.states.size();
    info["dims"] = {{"I", data.I}, {"J", data.J}, {"N", data.N}, {"K", data.K()}};
    info["subject_ids"] = data.subject_ids;
    info["columns"] = data.Z.column_names;
    info["diagnostics"] = fit.diagnostics;
    save_json(o.out / "fit.json", info);

    Manifest man("fit");
    man.input("dataset", o.dataset);
    if (o.priors) man.input("priors", *o.priors);
    if (o.replicate) man.flag("replicate", *o.replicate);
    man.flag("gfunction", o.model.gfunction);
    man.flag("sigma_x", o.model.sigma_x);
    man.flag("lambda", o.model.lambda);
    man.flag("kappa_bounds", {o.model.kappa_lb, o.model.kappa_ub});
    man.flag("niter", o.niter);
    man.flag("nwarmup", o.nwarmup);
    man.flag("nchains", o.nchains);
    man.flag("variant", std::string(to_string(ro.variant)));
    man.flag("max_state_draws", o.max_state_draws);
    man.note("seed", o.seed);
    man.write(o.out);

    for (const auto& p : fit.summary.params)
        std::cout << p.name << "  mean=" << csv::format_double(p.mean) << "  sd=" << csv::format_double(p.sd)
                  << "  n_eff=" << csv::format_double(std::round(p.n_eff)) << "  Rhat="
                  << csv::format_double(std::round(p.rhat * 1000.0) / 1000.0) << '\n';
    if (!fit.ok()) {
        for (const auto& d : fit.diagnostics) std::cerr << "diagnostic: " << d << '\n';
        return kExitDiagnostic;
    }
    return kExitOk;
}

int cmd_simulate(const SimulateOptions& o) {
    toml::table spec_file;
    try {
        spec_file = toml::parse_file(o.spec.string());
    } catch (const toml::parse_error& e) {
        throw ValidationError("spec: " + std::string(e.description()));
    }
    DesignSpec spec;
    spec.I = toml_count(spec_file, "I", spec.I);
    spec.J = toml_count(spec_file, "J", spec.J);
    spec.N = toml_count(spec_file, "N", spec.N);
    if (const auto* k = spec_file["K"].as_array()) {
        spec.K.clear();
        for (const auto& e : *k) {
            const auto v = e.value<std::int64_t>();
            if (!v || *v < 1) throw ValidationError("spec: K entries must be positive integers");
            spec.K.push_back(static_cast<std::size_t>(*v));
        }
    } else if (spec_file["K"]) {
        spec.K = {toml_count(spec_file, "K", 2)};
    }
    spec.formula = toml_get<std::string>(spec_file, "formula", "");
    if (const auto* m = spec_file["methods"].as_array()) {
        for (const auto& e : *m) {
            const auto v = e.value<std::string>();
            if (!v) throw ValidationError("spec: methods must be strings");
            spec.methods.push_back(parse_assign_method(*v));
        }
    }
    ModelOptions mo;
    mo.gfunction = toml_get<std::string>(spec_file, "gfunction", mo.gfunction);
    mo.sigma_x = toml_get<double>(spec_file, "sigma_x", mo.sigma_x);
    mo.lambda = toml_get<double>(spec_file, "lambda", mo.lambda);
    if (const auto* kb = spec_file["kappa_bounds"].as_array()) {
        if (kb->size() != 2) throw ValidationError("spec: kappa_bounds needs two values");
        mo.kappa_lb = kb->get(0)->value<double>().value_or(mo.kappa_lb);
        mo.kappa_ub = kb->get(1)->value<double>().value_or(mo.kappa_ub);
    }
    const ModelConfig cfg = make_config(mo);
    spec.validate();

    // The Z column count is known only after parsing the formula.
    Rng probe = make_rng(o.seed, 0);
    const std::size_t K = generate_design(spec, probe).z.design.Z.cols();
    const auto priors = load_priors(o.priors, K);

    const SimulatedData sim = generate_data(spec, priors, cfg, o.M, o.seed);
    write_simulation(o.out, sim);
    json info;
    info["config"] = config_json(cfg);
    info["priors"] = prior_sources(priors);
    std::size_t clamped = 0;
    for (const auto& r : sim.replicates) clamped += r.clamped;
    info["clamped_total"] = clamped;
    save_json(o.out / "simulation.json", info);

    Manifest man("simulate");
    man.input("spec", o.spec);
    if (o.priors) man.input("priors", *o.priors);
    man.flag("M", o.M);
    man.note("seed", o.seed);
    man.write(o.out);
    std::cout << "simulated M=" << o.M << " replicates (I=" << spec.I << ", J=" << spec.J << ", N=" << spec.N
              << ", K=" << K << ") -> " << o.out.string() << '\n';
    return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& o) {
    const json info = load_json(o.fit / "fit.json");
    ModelConfig cfg;
    try {
        cfg = config_from_json(info.at("config"));
    } catch (const json::exception& e) {
        throw ValidationError("fit.json: " + std::string(e.what()));
    }
    const PosteriorDraws draws = read_fit(o.fit);
    const ProcessedDataset data = load_dataset(o.dataset, o.replicate);
    const Evaluation ev = evaluate_ssm(draws, data, cfg, o.M, o.seed, o.threads);
    write_evaluation(o.out, ev, data);

    if (o.plots) {
        svg::histogram(o.out / "hist_PA_ov.svg", ev.pa_overall, "PA_ov");
        svg::histogram(o.out / "hist_PA_sbj.svg", ev.pa_subject.data(), "PA_sbj");
        svg::histogram(o.out / "hist_DTW.svg", ev.dtw.data(), "DTW");
        std::vector<svg::Series> obs;
        for (std::size_t c = 0; c < data.columns(); ++c) obs.push_back({data.Y.col(c), "#333333", 0.4});
        const std::vector<svg::Band> bands{{kPi / 2.0, kPi, "#2ca02c", "T"}, {0.0, kPi / 2.0, "#d62728", "D"}};
        svg::lines(o.out / "trajectories.svg", obs, "observed angles", "time step", bands);
        const Matrix xm = draws.mean_filtered_states();
        std::vector<svg::Series> xs;
        for (std::size_t i = 0; i < xm.rows(); ++i) {
            const auto r = xm.row(i);
            xs.push_back({std::vector<double>(r.begin(), r.end()), "#1f77b4", 0.8});
        }
        svg::lines(o.out / "states.svg", xs, "filtered latent states", "time step");
        static const char* colours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
        for (std::size_t k = 0; k < draws.K(); ++k) {
            std::vector<svg::Series> tr;
            const auto chains = draws.coordinate(k);
            for (std::size_t c = 0; c < chains.size(); ++c) tr.push_back({chains[c], colours[c % 6], 0.7});
            const std::string name = "gamma_" + std::to_string(k + 1);
            svg::lines(o.out / ("trace_" + name + ".svg"), tr, name, "iteration");
            std::vector<double> pooled;
            for (const auto& ch : chains) pooled.insert(pooled.end(), ch.begin(), ch.end());
            svg::histogram(o.out / ("density_" + name + ".svg"), pooled, name);
        }
    }

    Manifest man("evaluate");
    man.input("fit", o.fit);
    man.input("dataset", o.dataset);
    if (o.replicate) man.flag("replicate", *o.replicate);
    man.flag("M", o.M);
    man.flag("plots", o.plots);
    man.note("seed", o.seed);
    man.write(o.out);
    std::cout << "PA_ov=" << csv::format_double(ev.mean_pa_overall) << " PA_sbj="
              << csv::format_double(ev.mean_pa_subject) << " DTW=" << csv::format_double(ev.mean_dtw) << '\n';
    return kExitOk;
}

int cmd_evidence(const EvidenceOptions& o) {
    const json info = load_json(o.fit / "fit.json");
    ModelConfig cfg;
    std::vector<int> subjects;
    try {
        cfg = config_from_json(info.at("config"));
        subjects = info.at("subject_ids").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw ValidationError("fit.json: " + std::string(e.what()));
    }
    const auto windows = parse_windows(o.windows);
    const PosteriorDraws draws = read_fit(o.fit);
    if (draws.states.empty()) throw ValidationError("fit carries no latent-state draws");
    const auto rows = evidence_analysis(draws.mean_filtered_states(), windows, draws.gamma_mean(), cfg.link);
    fs::create_directories(o.out);
    write_evidence(o.out / "evidence.csv", rows, windows, subjects);

    Manifest man("evidence");
    man.input("fit", o.fit);
    man.flag("windows", o.windows);
    man.write(o.out);
    std::cout << rows.size() << " evidence rows -> " << (o.out / "evidence.csv").string() << '\n';
    return kExitOk;
}

}  // namespace mtrack::cli
