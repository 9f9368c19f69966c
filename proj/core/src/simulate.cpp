#include "mtrack/simulate.hpp"

#include <cmath>

#include "meta_json.hpp"
#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/kalman.hpp"

namespace mtrack {

void DesignSpec::validate() {
    if (I == 0 || J == 0 || N == 0) throw ValidationError("design: I, J and N must be positive");
    if (K.empty()) throw ValidationError("design: at least one factor is required");
    for (std::size_t k : K)
        if (k == 0) throw ValidationError("design: every factor needs at least one level");
    if (methods.empty()) methods.assign(K.size(), AssignMethod::symmetric);
    if (methods.size() != K.size()) throw ValidationError("design: one Z method per factor is required");
    if (formula.empty()) {
        formula = "~Z1";
        for (std::size_t f = 1; f < K.size(); ++f) formula += "*Z" + std::to_string(f + 1);
    }
    for (std::size_t f = 0; f < K.size(); ++f)
        if (methods[f] == AssignMethod::symmetric && J % K[f] != 0)
            throw ValidationError("design: J=" + std::to_string(J) + " is not divisible by K=" +
                                  std::to_string(K[f]) + " (factor Z" + std::to_string(f + 1) + ")");
}

Design generate_design(DesignSpec spec, Rng& rng) {
    spec.validate();
    Design d;
    d.z = generate_Z(spec.J, spec.K, spec.methods, spec.formula, rng);
    for (std::size_t i = 0; i < spec.I; ++i)
        for (std::size_t j = 0; j < spec.J; ++j) {
            DesignRow row{static_cast<int>(i + 1), static_cast<int>(j + 1), {}};
            for (std::size_t lv : d.z.assignment[j]) row.levels.push_back(lv + 1);
            d.table.push_back(std::move(row));
        }
    d.spec = std::move(spec);
    return d;
}

Matrix link_angles(const Matrix& x, std::span<const double> beta, Link link) {
    const std::size_t I = x.rows();
    const std::size_t N = x.cols();
    const std::size_t J = beta.size();
    Matrix mu(N, I * J);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < I; ++i)
            for (std::size_t j = 0; j < J; ++j) mu(n, i * J + j) = gfun(link, x(i, n), beta[j]);
    return mu;
}

Replicate simulate_replicate(const Design& design, std::span<const double> gamma, const ModelConfig& cfg,
                             Rng& rng) {
    cfg.validate();
    const auto& spec = design.spec;
    const Matrix& Z = design.z.design.Z;
    if (gamma.size() != Z.cols())
        throw ValidationError("simulate: gamma has " + std::to_string(gamma.size()) + " entries, Z has " +
                              std::to_string(Z.cols()) + " columns");
    const std::size_t I = spec.I;
    const std::size_t J = spec.J;
    const std::size_t N = spec.N;

    Replicate rep;
    rep.gamma.assign(gamma.begin(), gamma.end());
    rep.beta.assign(J, 0.0);
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t k = 0; k < Z.cols(); ++k) rep.beta[j] += Z(j, k) * gamma[k];
    if (cfg.link == Link::gompertz)
        for (double b : rep.beta)
            if (b < 0.0) throw ValidationError("simulate: gompertz link needs Z gamma >= 0");

    std::normal_distribution<double> step(0.0, cfg.sigma_x);
    Matrix x_in(I, N);
    rep.X = Matrix(N, I);
    for (std::size_t i = 0; i < I; ++i) {
        double x = kAngleFloor;
        for (std::size_t n = 0; n < N; ++n) {
            if (n > 0) x += step(rng);
            rep.X(n, i) = x;
            x_in(i, n) = x;
        }
    }
    rep.MU = link_angles(x_in, rep.beta, cfg.link);
    rep.D = Matrix(N, I * J);
    rep.Y = Matrix(N, I * J);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < I * J; ++c) {
            const double mu = rep.MU(n, c);
            // The location can saturate to exactly 0 for extreme states.
            const double d = compute_d(clamp_to_arc(mu));
            rep.D(n, c) = d;
            const double draw = vonmises_sample(mu, concentration(d, cfg), rng);
            const double y = clamp_to_arc(draw);
            if (y != draw) ++rep.clamped;
            rep.Y(n, c) = y;
        }
    return rep;
}

ProcessedDataset to_dataset(const Design& design, const Replicate& rep) {
    ProcessedDataset ds;
    ds.I = design.spec.I;
    ds.J = design.spec.J;
    ds.N = design.spec.N;
    ds.Y = rep.Y;
    ds.D = rep.D;
    ds.Z = design.z.design;
    ds.factors = design.z.factors;
    ds.trial_levels = design.z.assignment;
    for (std::size_t i = 0; i < ds.I; ++i) ds.subject_ids.push_back(static_cast<int>(i + 1));
    for (std::size_t j = 0; j < ds.J; ++j) ds.trial_ids.push_back(static_cast<int>(j + 1));
    return ds;
}

ProcessedDataset SimulatedData::dataset(std::size_t m) const { return to_dataset(design, replicates.at(m)); }

SimulatedData generate_data(DesignSpec spec, std::span<const PriorSpec> priors, const ModelConfig& cfg,
                            std::size_t M, std::uint64_t seed) {
    SimulatedData out;
    Rng design_rng = make_rng(seed, 0);
    out.design = generate_design(std::move(spec), design_rng);
    const std::size_t K = out.design.z.design.Z.cols();
    if (priors.size() != K)
        throw ValidationError("simulate: " + std::to_string(priors.size()) + " priors for " + std::to_string(K) +
                              " Z columns");

    const Matrix& Z = out.design.z.design.Z;
    out.replicates.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        Rng rng = make_rng(seed, m + 1);
        std::vector<double> gamma(K);
        bool ok = false;
        for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
            for (std::size_t k = 0; k < K; ++k) gamma[k] = priors[k].sample(rng);
            ok = std::isfinite(log_prior(gamma, priors, cfg.link));
            if (ok && cfg.link == Link::gompertz)
                for (std::size_t j = 0; j < Z.rows() && ok; ++j) {
                    double b = 0.0;
                    for (std::size_t k = 0; k < K; ++k) b += Z(j, k) * gamma[k];
                    ok = b >= 0.0;
                }
        }
        if (!ok) throw ValidationError("simulate: priors never satisfied the gompertz support");
        out.replicates.push_back(simulate_replicate(out.design, gamma, cfg, rng));
    }
    return out;
}

void write_simulation(const std::filesystem::path& dir, const SimulatedData& sim) {
    std::filesystem::create_directories(dir);
    const Design& d = sim.design;
    const std::size_t K = d.z.design.Z.cols();
    const std::size_t F = d.spec.K.size();

    std::vector<std::string> header{"m"};
    for (std::size_t k = 0; k < K; ++k) header.push_back("gamma_" + std::to_string(k + 1));
    header.push_back("clamped");
    Matrix params(sim.replicates.size(), K + 2);
    for (std::size_t m = 0; m < sim.replicates.size(); ++m) {
        params(m, 0) = static_cast<double>(m + 1);
        for (std::size_t k = 0; k < K; ++k) params(m, k + 1) = sim.replicates[m].gamma[k];
        params(m, K + 1) = static_cast<double>(sim.replicates[m].clamped);
    }
    csv::write_matrix(dir / "params.csv", params, header);

    std::vector<std::string> dh{"sbj", "trial"};
    for (const auto& f : d.z.factors) dh.push_back(f.name);
    Matrix table(d.table.size(), F + 2);
    for (std::size_t r = 0; r < d.table.size(); ++r) {
        table(r, 0) = d.table[r].sbj;
        table(r, 1) = d.table[r].trial;
        for (std::size_t f = 0; f < F; ++f) table(r, f + 2) = static_cast<double>(d.table[r].levels[f]);
    }
    csv::write_matrix(dir / "design.csv", table, dh);
    csv::write_matrix(dir / "Z.csv", d.z.design.Z, d.z.design.column_names);

    std::vector<std::string> xh;
    for (std::size_t i = 0; i < d.spec.I; ++i) xh.push_back("s" + std::to_string(i + 1));
    nlohmann::json meta;
    std::vector<std::string> labels;
    for (std::size_t m = 0; m < sim.replicates.size(); ++m) {
        const Replicate& rep = sim.replicates[m];
        const ProcessedDataset ds = to_dataset(d, rep);
        if (m == 0) {
            meta = detail::dataset_meta(ds);
            labels = column_labels(ds);
        }
        const std::string tag = std::to_string(m + 1) + ".csv";
        csv::write_matrix(dir / ("Y_" + tag), rep.Y, labels);
        csv::write_matrix(dir / ("D_" + tag), rep.D, labels);
        csv::write_matrix(dir / ("MU_" + tag), rep.MU, labels);
        csv::write_matrix(dir / ("X_" + tag), rep.X, xh);
    }
    if (sim.replicates.empty()) {
        Replicate empty;
        empty.Y = Matrix(d.spec.N, d.spec.I * d.spec.J, kPi / 2.0);
        empty.D = Matrix(d.spec.N, d.spec.I * d.spec.J, kPi / 4.0);
        meta = detail::dataset_meta(to_dataset(d, empty));
    }
    meta["M"] = sim.replicates.size();
    meta["methods"] = nlohmann::json::array();
    for (auto m : d.spec.methods) meta["methods"].push_back(m == AssignMethod::symmetric ? "symmetric" : "random");
    detail::write_json(dir / "meta.json", meta);
}

ProcessedDataset read_simulated_dataset(const std::filesystem::path& dir, std::size_t m) {
    if (m == 0) throw ValidationError("replicate numbers start at 1");
    const std::string tag = std::to_string(m) + ".csv";
    if (!std::filesystem::exists(dir / ("Y_" + tag)))
        throw ValidationError("replicate " + std::to_string(m) + " not found in " + dir.string());
    return detail::read_dataset_files(dir, "Y_" + tag, "D_" + tag);
}

}  // namespace mtrack
